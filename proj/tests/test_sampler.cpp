#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include "rfexplain/error.hpp"
#include "rfexplain/rng.hpp"
#include "rfexplain/sampler.hpp"
#include "support/support.hpp"

using namespace rfx;
using namespace rfx::testing;

namespace {

struct Med {
  Forest forest = f_med();
  DomainPartition partition{forest};
  PlausibilityModel model{forest, partition};
};

bool same(const Counters& a, const Counters& b) {
  if (a.ambiguous != b.ambiguous || a.nonambiguous != b.nonambiguous ||
      a.evaluations != b.evaluations || a.queries.size() != b.queries.size()) {
    return false;
  }
  for (std::size_t q = 0; q < a.queries.size(); ++q) {
    const auto& x = a.queries[q];
    const auto& y = b.queries[q];
    if (x.pos != y.pos || x.neg != y.neg || x.cond_pos != y.cond_pos || x.cond_neg != y.cond_neg ||
        x.cond_rejected != y.cond_rejected) {
      return false;
    }
  }
  return true;
}

}  // namespace

TEST_CASE("Philox4x32-10 known answers") {
  using B = Philox4x32::Block;
  CHECK(Philox4x32::encrypt({0, 0, 0, 0}, {0, 0}) ==
        B{0x6627e8d5, 0xe169c58d, 0xbc57ac4c, 0x9b00dbd8});
  CHECK(Philox4x32::encrypt({0xffffffff, 0xffffffff, 0xffffffff, 0xffffffff},
                            {0xffffffff, 0xffffffff}) ==
        B{0x408f276d, 0x41c83b0e, 0xa20bc7c6, 0x6d5451fd});
  CHECK(Philox4x32::encrypt({0x243f6a88, 0x85a308d3, 0x13198a2e, 0x03707344},
                            {0xa4093822, 0x299f31d0}) ==
        B{0xd16cfe09, 0x94fdcceb, 0x5001e420, 0x24126ea1});
}

TEST_CASE("counter streams are reproducible and distinct") {
  CounterRng a(42, kStreamStage1, 7), b(42, kStreamStage1, 7), c(42, kStreamStage1, 8),
      d(42, kStreamTopUp, 7);
  std::uint32_t xa = a.next(), xb = b.next(), xc = c.next(), xd = d.next();
  CHECK(xa == xb);
  CHECK(xa != xc);
  CHECK(xa != xd);
  CounterRng r(1, 0, 0);
  for (int k = 0; k < 1000; ++k) CHECK(r.uniform(3) < 3);
  CHECK(r.uniform(1) == 0);
}

TEST_CASE("Chernoff planning") {
  CHECK(chernoff_sample_size(0.5, 0.1, 0.05) == 2214);
  CHECK(chernoff_sample_size(1.0, 0.1, 0.05) == 1107);
  CHECK_THROWS_AS(chernoff_sample_size(0.0, 0.1, 0.05), Error);
  CHECK_THROWS_AS(chernoff_sample_size(0.5, 0.0, 0.05), Error);
  CHECK_THROWS_AS(chernoff_sample_size(0.5, 0.1, 1.0), Error);
}

TEST_CASE("estimates") {
  Counters c;
  c.nonambiguous = 9800;
  c.ambiguous = 200;
  CHECK(*ambiguity_estimate(c).value == doctest::Approx(0.98));
  CHECK_FALSE(ambiguity_estimate(Counters{}).value.has_value());
  c.nonambiguous = 4;
  c.ambiguous = 4;
  CHECK(*ambiguity_estimate(c).value == 0.5);
  CHECK(ambiguity_estimate(c).samples == 8);

  ChernoffBound plan{0.1, 0.05};
  CHECK(make_estimate(2000, 2214, plan).bound.has_value());
  CHECK_FALSE(make_estimate(2000, 2213, plan).bound.has_value());
  CHECK_FALSE(make_estimate(100, 3000, plan).bound.has_value());
  CHECK_FALSE(make_estimate(2000, 2214).bound.has_value());
}

TEST_CASE("config validation") {
  SamplerConfig cfg;
  cfg.max_iterations = 0;
  try {
    validate(cfg);
    FAIL("accepted an empty budget");
  } catch (const Error& e) {
    CHECK(std::string(e.what()).find("empty budget") != std::string::npos);
  }
  cfg.max_iterations = 1;
  cfg.workers = 0;
  CHECK_THROWS_AS(validate(cfg), Error);
}

TEST_CASE("equivalence class draws are uniform per feature") {
  Med m;
  std::vector<std::uint32_t> cells(4);
  std::uint64_t young = 0, a1 = 0;
  const int n = 100000;
  for (int i = 0; i < n; ++i) {
    CounterRng rng(3, kStreamStage1, static_cast<std::uint64_t>(i));
    sample_equivalence_class(m.partition, rng, cells);
    CHECK(cells[kC] == 0);
    young += cells[kAge] == 0 ? 1 : 0;
    a1 += cells[kA];
  }
  CHECK(static_cast<double>(young) / n == doctest::Approx(0.5).epsilon(0.02));
  CHECK(static_cast<double>(a1) / n == doctest::Approx(0.5).epsilon(0.02));
  std::vector<std::uint32_t> again(4);
  CounterRng r1(3, kStreamStage1, 5), r2(3, kStreamStage1, 5);
  sample_equivalence_class(m.partition, r1, cells);
  sample_equivalence_class(m.partition, r2, again);
  CHECK(cells == again);
}

TEST_CASE("stage-1 accounting matches a replay of the same draws") {
  Med m;
  std::vector<QuerySpec> qs{parse_query(m.partition, "C=Pos|B=1,Age<=35"),
                            parse_query(m.partition, "A=0|C=Neg"),
                            parse_query(m.partition, "C=Neg|A=0")};
  SamplerConfig cfg;
  cfg.seed = 99;
  cfg.max_iterations = 5000;
  cfg.early_stop = false;
  Stage1Result r = run_stage1(m.model, qs, cfg);
  CHECK(r.counters.iterations() == 5000);
  CHECK(r.counters.evaluations == 5000);

  std::uint64_t amb = 0;
  std::vector<std::uint64_t> pos(qs.size()), cond(qs.size());
  std::vector<std::uint32_t> cells(4);
  for (std::uint64_t i = 0; i < 5000; ++i) {
    CounterRng rng(99, kStreamStage1, i);
    sample_equivalence_class(m.partition, rng, cells);
    Output o = f_med_oracle(static_cast<int>(cells[kA]), static_cast<int>(cells[kB]), cells[kAge] == 0);
    if (!o) {
      ++amb;
      continue;
    }
    for (std::size_t q = 0; q < qs.size(); ++q) {
      if (!qs[q].condition.matches(cells, *o)) continue;
      ++cond[q];
      if (qs[q].target.matches(cells, *o)) ++pos[q];
    }
  }
  CHECK(r.counters.ambiguous == amb);
  for (std::size_t q = 0; q < qs.size(); ++q) {
    CHECK(r.counters.queries[q].pos == pos[q]);
    CHECK(r.counters.queries[q].pos + r.counters.queries[q].neg == cond[q]);
    CHECK(cond[q] <= r.counters.nonambiguous);
  }
}

TEST_CASE("worker count does not change the counters") {
  Med m;
  std::vector<QuerySpec> qs{parse_query(m.partition, "C=Pos|B=1")};
  SamplerConfig cfg;
  cfg.seed = 5;
  cfg.max_iterations = 10000;
  cfg.early_stop = false;
  Stage1Result one = run_stage1(m.model, qs, cfg);
  for (unsigned w : {2u, 3u, 8u}) {
    cfg.workers = w;
    CHECK(same(one.counters, run_stage1(m.model, qs, cfg).counters));
  }
}

TEST_CASE("50k samples on F_med") {
  Med m;
  std::vector<QuerySpec> qs{parse_query(m.partition, "C=Pos|B=1,Age<=35"),
                            parse_query(m.partition, "A=0|C=Neg"),
                            parse_query(m.partition, "C=Pos"),
                            parse_query(m.partition, "C=Pos|A=1,B=0")};
  SamplerConfig cfg;
  cfg.seed = 7;
  cfg.max_iterations = 50000;
  cfg.early_stop = false;
  Stage1Result r = run_stage1(m.model, qs, cfg);
  CHECK(*r.nonambiguous.value == doctest::Approx(0.5).epsilon(0.04));
  CHECK(r.nonambiguous.bound.has_value());
  CHECK(*r.estimates[0].value == 1.0);
  CHECK(*r.estimates[1].value == 1.0);
  CHECK(std::abs(*r.estimates[2].value - 0.5) <= 0.02);
  CHECK_FALSE(r.estimates[3].value.has_value());
  CHECK(r.estimates[3].samples == 0);
}

TEST_CASE("early stop") {
  Med m;
  SamplerConfig cfg;
  cfg.seed = 7;
  Stage1Result r = run_stage1(m.model, {}, cfg);
  CHECK(r.stopped_early);
  CHECK(r.counters.iterations() == 3072);  // first round end past 2214
  cfg.early_stop = false;
  cfg.max_iterations = 4000;
  r = run_stage1(m.model, {}, cfg);
  CHECK_FALSE(r.stopped_early);
  CHECK(r.counters.iterations() == 4000);
}

TEST_CASE("progress hook sees growing snapshots") {
  Med m;
  SamplerConfig cfg;
  cfg.max_iterations = 3000;
  cfg.early_stop = false;
  std::vector<std::uint64_t> seen;
  run_stage1(m.model, {}, cfg, [&](const Counters& c) { seen.push_back(c.iterations()); });
  CHECK(seen == std::vector<std::uint64_t>{1024, 2048, 3000});
}

TEST_CASE("conditional forward sampling") {
  Med m;
  Assignment u;
  PartialAssignment b1_young = parse_query(m.partition, "C=Pos|B=1,Age<=35").condition;
  PartialAssignment a1b0 = parse_query(m.partition, "C=Pos|A=1,B=0").condition;
  for (std::uint64_t i = 0; i < 200; ++i) {
    CounterRng rng(1, kStreamTopUp, i);
    REQUIRE(conditional_forward_sample(m.model, b1_young, rng, u));
    CHECK(u.cls == kPos);
    CHECK(u.features[kB] == 1);
    CounterRng rng2(1, kStreamTopUp, i);
    CHECK_FALSE(conditional_forward_sample(m.model, a1b0, rng2, u));
  }
  PartialAssignment with_class;
  with_class.class_value = 0;
  CounterRng rng(1, 0, 0);
  CHECK_THROWS_AS(conditional_forward_sample(m.model, with_class, rng, u), Error);

  ConditionalCounts cc = sample_conditional(m.model, a1b0, 1, kStreamTopUp, 100, 500);
  CHECK(cc.accepted == 0);
  CHECK(cc.rejected == 500);
}

TEST_CASE("rejection and conditional sampling agree") {
  Med m;
  for (const char* text : {"C=Neg|A=0", "C=Pos|B=1", "C=Pos|Age>35"}) {
    QuerySpec q = parse_query(m.partition, text);
    double exact = query_exact(m.model, q).value();
    SamplerConfig cfg;
    cfg.seed = 21;
    cfg.max_iterations = 50000;
    cfg.early_stop = false;
    std::vector<QuerySpec> qs{q};
    double rejection = *run_stage1(m.model, qs, cfg).estimates[0].value;
    ConditionalCounts cc = sample_conditional(m.model, q.condition, 21, kStreamTopUp, 50000, 200000);
    double conditional = static_cast<double>(cc.per_class[*q.target.class_value]) /
                         static_cast<double>(cc.accepted);
    CHECK(std::abs(rejection - exact) <= 0.02);
    CHECK(std::abs(conditional - exact) <= 0.02);
  }
}

TEST_CASE("conditional mode tops up starved sufficient queries") {
  Med m;
  std::vector<QuerySpec> qs{parse_query(m.partition, "C=Pos|B=1,Age<=35")};
  SamplerConfig cfg;
  cfg.seed = 3;
  cfg.max_iterations = 64;
  cfg.min_samples = 100;
  cfg.mode = SamplingMode::kConditional;
  Stage1Result r = run_stage1(m.model, qs, cfg);
  const QueryCounters& q = r.counters.queries[0];
  CHECK(q.samples() == 100);
  CHECK(q.cond_neg == 0);
  CHECK(*r.estimates[0].value == 1.0);
}
