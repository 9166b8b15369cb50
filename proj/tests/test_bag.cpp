#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <algorithm>

#include "rfexplain/bag.hpp"
#include "rfexplain/cnf.hpp"
#include "rfexplain/error.hpp"
#include "support/support.hpp"

using namespace rfx;
using namespace rfx::testing;

namespace {

struct Med {
  Forest forest = f_med();
  DomainPartition partition{forest};
  Bag bag = Bag::explanation(forest, partition);
  SymbolicForest symbolic{forest, partition};
};

std::size_t count_label(const Bag& bag, const Labelling& l, ArgumentKind kind, Label label) {
  std::size_t n = 0;
  for (ArgumentId a = 0; a < bag.size(); ++a) {
    if (bag.argument(a).kind == kind && l[a] == label) ++n;
  }
  return n;
}

}  // namespace

TEST_CASE("F_med BAG structure") {
  Med m;
  CHECK(m.bag.size() == 15);
  CHECK(m.bag.class_count() == 2);
  CHECK(m.bag.attacks().size() == 22);
  CHECK(m.bag.supports().size() == 6);
  for (std::size_t t = 0; t < 2; ++t) {
    for (std::size_t r = 0; r < 3; ++r) {
      ArgumentId id = m.bag.rule_argument(t, r);
      std::size_t class_attacks = 0;
      for (const auto& [s, d] : m.bag.attacks()) {
        if (s == id && m.bag.argument(d).kind == ArgumentKind::kClass) ++class_attacks;
      }
      CHECK(class_attacks == 1);
      CHECK(std::count_if(m.bag.supports().begin(), m.bag.supports().end(),
                          [&](const Edge& e) { return e.first == id; }) == 1);
    }
  }
  // Age in (35, inf) contradicts the premise of {B=1, Age<=35} -> Pos.
  Edge e{m.bag.feature_argument(kAge, 1), m.bag.rule_argument(1, 0)};
  CHECK(std::binary_search(m.bag.attacks().begin(), m.bag.attacks().end(), e));
  Edge none{m.bag.feature_argument(kAge, 0), m.bag.rule_argument(1, 0)};
  CHECK_FALSE(std::binary_search(m.bag.attacks().begin(), m.bag.attacks().end(), none));
  // Feature arguments of one feature attack each other and nothing of other features.
  Edge ab{m.bag.feature_argument(kA, 0), m.bag.feature_argument(kB, 0)};
  CHECK_FALSE(std::binary_search(m.bag.attacks().begin(), m.bag.attacks().end(), ab));
  Edge aa{m.bag.feature_argument(kA, 0), m.bag.feature_argument(kA, 1)};
  CHECK(std::binary_search(m.bag.attacks().begin(), m.bag.attacks().end(), aa));
}

TEST_CASE("stump BAG") {
  Forest f = Forest::parse(R"({"features":[{"name":"X","kind":"categorical","values":["0","1"]}],
    "classes":["a","b"],"trees":[{"root":{"leaf":0}}]})");
  DomainPartition p(f);
  Bag bag = Bag::explanation(f, p);
  CHECK(bag.size() == 2 + 1 + 1);
  CHECK(bag.supports() == std::vector<Edge>{{2, 0}});
  CHECK(bag.attacks() == std::vector<Edge>{{2, 1}});
  SymbolicForest s(f, p);
  std::vector<std::uint32_t> cells{0};
  Labelling l = labelling_from_class(bag, s, cells);
  CHECK(l[bag.class_argument(0)] == Label::kIn);
  CHECK(l[bag.class_argument(1)] == Label::kOut);
}

TEST_CASE("domination counts") {
  // 0 is attacked by 1 and 2 and supported by 3.
  Bag bag({{}, {}, {}, {}}, {{1, 0}, {2, 0}}, {{3, 0}});
  Labelling l{Label::kUndecided, Label::kIn, Label::kIn, Label::kIn};
  CHECK(attackers_dominate(bag, l, 0));
  CHECK_FALSE(supporters_dominate(bag, l, 0));
  l[2] = Label::kOut;
  CHECK_FALSE(attackers_dominate(bag, l, 0));
  CHECK_FALSE(supporters_dominate(bag, l, 0));
  l[1] = Label::kOut;
  CHECK(supporters_dominate(bag, l, 0));
}

TEST_CASE("bi-completeness") {
  Bag lone({{}}, {}, {});
  CHECK_FALSE(is_bicomplete(lone, {Label::kUndecided}));
  CHECK(is_bicomplete(lone, {Label::kIn}));
  CHECK(is_bistable(lone, {Label::kIn}));

  Med m;
  std::vector<std::uint32_t> cells{1, 1, 0, 0};
  Labelling l = labelling_from_class(m.bag, m.symbolic, cells);
  CHECK(is_bicomplete(m.bag, l));
  l[m.bag.feature_argument(kA, 0)] = Label::kIn;
  CHECK_FALSE(is_bicomplete(m.bag, l));
}

TEST_CASE("L_x on the worked inputs") {
  Med m;
  Labelling l = labelling_from_input(m.bag, m.symbolic, {1, 1, 0, 25});
  CHECK(l[m.bag.class_argument(kPos)] == Label::kIn);
  CHECK(l[m.bag.class_argument(kNeg)] == Label::kOut);
  CHECK(l[m.bag.rule_argument(0, 0)] == Label::kIn);
  CHECK(l[m.bag.rule_argument(1, 0)] == Label::kIn);
  CHECK(supporters_dominate(m.bag, l, m.bag.class_argument(kPos)));
  CHECK(is_bistable(m.bag, l));

  Labelling tie = labelling_from_input(m.bag, m.symbolic, {1, 0, 0, 25});
  CHECK(tie[m.bag.class_argument(kPos)] == Label::kUndecided);
  CHECK(tie[m.bag.class_argument(kNeg)] == Label::kUndecided);
  CHECK(is_bicomplete(m.bag, tie));
  CHECK_FALSE(is_bistable(m.bag, tie));
}

TEST_CASE("faithfulness on random two-class forests") {
  for (std::uint64_t seed = 100; seed < 130; ++seed) {
    Forest f = random_forest(seed, {.numeric = true});
    DomainPartition p(f);
    Bag bag = Bag::explanation(f, p);
    SymbolicForest s(f, p);
    for_each_class(p, 1 << 16, [&](std::span<const std::uint32_t> cells) {
      Labelling l = labelling_from_class(bag, s, cells);
      Output o = s.classify(cells);
      CHECK(is_bicomplete(bag, l));
      CHECK(is_bistable(bag, l) == o.has_value());
      CHECK(count_label(bag, l, ArgumentKind::kRule, Label::kIn) == f.tree_count());
      CHECK(count_label(bag, l, ArgumentKind::kFeature, Label::kIn) == f.feature_count());
      if (o) {
        CHECK(l[bag.class_argument(*o)] == Label::kIn);
        CHECK(count_label(bag, l, ArgumentKind::kClass, Label::kIn) == 1);
      }
      LxStatus st = lx_status(s, cells);
      CHECK(st.bistable == o.has_value());
      CHECK(st.accepted == o);
    });
  }
}

TEST_CASE("three classes: domination and plurality part ways") {
  // Four stumps voting 2/1/1: plurality picks class 0, no class has a majority.
  auto stump = [](std::size_t c) {
    Tree::Node n;
    n.label = c;
    return Tree({n});
  };
  std::vector<Feature> x{{"X", FeatureKind::kCategorical, {"0", "1"}}};
  Forest f(x, {"a", "b", "c"}, {stump(0), stump(0), stump(1), stump(2)});
  DomainPartition p(f);
  Bag bag = Bag::explanation(f, p);
  SymbolicForest s(f, p);
  std::vector<std::uint32_t> cells{0};
  CHECK(s.classify(cells) == 0);
  Labelling l = labelling_from_class(bag, s, cells);
  CHECK(l[bag.class_argument(0)] == Label::kUndecided);
  CHECK_FALSE(is_bistable(bag, l));
  CHECK_FALSE(lx_status(s, cells).bistable);

  // 1/1/1: the output is a tie, but every class falls short of a majority.
  Forest g(x, {"a", "b", "c"}, {stump(0), stump(1), stump(2)});
  DomainPartition gp(g);
  Bag gbag = Bag::explanation(g, gp);
  SymbolicForest gs(g, gp);
  CHECK_FALSE(gs.classify(cells).has_value());
  Labelling gl = labelling_from_class(gbag, gs, cells);
  CHECK(is_bistable(gbag, gl));
  LxStatus st = lx_status(gs, cells);
  CHECK(st.bistable);
  CHECK_FALSE(st.accepted.has_value());
}

TEST_CASE("bi-stable enumeration") {
  Med m;
  ExactReasoner r(m.forest, m.partition, m.bag);
  std::vector<Output> accepted;
  std::uint64_t n = r.enumerate_bistable([&](std::span<const std::uint32_t>, Output o) {
    accepted.push_back(o);
  });
  CHECK(n == 4);
  CHECK(r.bistable_count() == 4);
  CHECK(std::count(accepted.begin(), accepted.end(), Output(kPos)) == 2);
  CHECK(std::count(accepted.begin(), accepted.end(), Output(kNeg)) == 2);

  CnfFormula clause;
  clause.variables = 3;
  clause.clauses.push_back({1, 2, 3});
  Forest cf = reduce_3cnf_to_forest(clause);
  DomainPartition cp(cf);
  Bag cb = Bag::explanation(cf, cp);
  CHECK(ExactReasoner(cf, cp, cb).bistable_count() == 1);

  Forest stumps = Forest::parse(R"({"features":[{"name":"X","kind":"categorical","values":["0","1"]},
    {"name":"Y","kind":"categorical","values":["0","1"]}],
    "classes":["a","b"],"trees":[{"root":{"leaf":0}}]})");
  DomainPartition sp(stumps);
  Bag sb = Bag::explanation(stumps, sp);
  CHECK(ExactReasoner(stumps, sp, sb).bistable_count() == 1);
  CHECK_THROWS_AS(ExactReasoner(m.forest, m.partition, m.bag, 4).bistable_count(), Error);
}

TEST_CASE("exact sufficient and necessary reasons on F_med") {
  Med m;
  ExactReasoner r(m.forest, m.partition, m.bag);
  std::vector<ArgumentId> b1_young{m.bag.feature_argument(kB, 1), m.bag.feature_argument(kAge, 0)};
  CHECK(r.is_sufficient(b1_young, kPos).holds);
  CHECK_FALSE(r.is_sufficient(b1_young, kPos).vacuous);
  CHECK(r.is_sufficient(b1_young, kPos).support == 2);

  // B=1 alone: the Age>35 classes with B=1 are ambiguous, so every accepting
  // labelling left accepts Pos.
  std::vector<ArgumentId> b1{m.bag.feature_argument(kB, 1)};
  CHECK(r.is_sufficient(b1, kPos).holds);

  std::vector<ArgumentId> empty;
  CHECK_FALSE(r.is_sufficient(empty, kPos).holds);

  std::vector<ArgumentId> a0{m.bag.feature_argument(kA, 0)};
  CHECK(r.is_necessary(a0, kNeg).holds);
  CHECK_FALSE(r.is_necessary(b1, kNeg).holds);

  // A=1, B=0 has no bi-stable labelling at all.
  std::vector<ArgumentId> a1b0{m.bag.feature_argument(kA, 1), m.bag.feature_argument(kB, 0)};
  ReasonCheck v = r.is_sufficient(a1b0, kNeg);
  CHECK(v.holds);
  CHECK(v.vacuous);

  std::vector<ArgumentId> rule{m.bag.rule_argument(0, 0)};
  CHECK_THROWS_AS(r.is_sufficient(rule, kPos), Error);
}

TEST_CASE("maximal necessary features") {
  Med m;
  ExactReasoner r(m.forest, m.partition, m.bag);
  NecessaryFeatures neg = r.maximal_necessary_features(kNeg);
  CHECK(neg.arguments ==
        std::vector<ArgumentId>{m.bag.feature_argument(kA, 0), m.bag.feature_argument(kB, 0)});
  CHECK_FALSE(neg.vacuous);
  NecessaryFeatures pos = r.maximal_necessary_features(kPos);
  CHECK(pos.arguments ==
        std::vector<ArgumentId>{m.bag.feature_argument(kB, 1), m.bag.feature_argument(kAge, 0)});

  // A class no tree ever predicts: every feature argument, flagged.
  Forest f = Forest::parse(R"({"features":[{"name":"X","kind":"categorical","values":["0","1"]}],
    "classes":["a","b"],"trees":[{"root":{"test":{"feature":0,"op":"eq","value":"1"},
    "true":{"leaf":0},"false":{"leaf":0}}}]})");
  DomainPartition p(f);
  Bag bag = Bag::explanation(f, p);
  NecessaryFeatures never = ExactReasoner(f, p, bag).maximal_necessary_features(1);
  CHECK(never.vacuous);
  CHECK(never.arguments.size() == 2);
}

TEST_CASE("export format is stable") {
  Med m;
  std::string dump = export_bag(m.bag, m.forest, m.partition);
  CHECK(dump.rfind("arg 0 class Pos\narg 1 class Neg\narg 2 rule T0 {A=1} -> Pos\n", 0) == 0);
  CHECK(dump.find("arg 14 feature Age in (35, inf)\natt 2 1\n") != std::string::npos);
  CHECK(dump.find("sup 2 0\n") != std::string::npos);
  CHECK(export_bag(m.bag, m.forest, m.partition) == dump);
}
