#include "rfexplain/markov.hpp"

#include <algorithm>
#include <set>

#include "rfexplain/error.hpp"

namespace rfx {

PlausibilityModel::PlausibilityModel(const Forest& forest, const DomainPartition& partition)
    : symbolic_(forest, partition) {
  for (std::size_t i = 0; i < forest.feature_count(); ++i) {
    variables_.push_back({VariableKind::kFeature, static_cast<std::uint32_t>(i),
                          partition.cell_count(i)});
  }
  for (std::size_t t = 0; t < forest.tree_count(); ++t) {
    const Tree& tree = forest.trees()[t];
    variables_.push_back({VariableKind::kTree, static_cast<std::uint32_t>(t), tree.leaf_count()});
    std::set<std::uint32_t> used;
    for (const Tree::Node& node : tree.nodes()) {
      if (!node.leaf) used.insert(static_cast<std::uint32_t>(node.test.feature));
    }
    scopes_.emplace_back(used.begin(), used.end());
  }
  variables_.push_back({VariableKind::kClass, 0, forest.class_count()});
}

int PlausibilityModel::tree_factor(std::size_t tree, const Assignment& u) const {
  return symbolic_.active_rule(tree, u.features) == u.trees[tree] ? 1 : 0;
}

int PlausibilityModel::class_factor(const Assignment& u) const {
  std::vector<std::uint32_t> votes(forest().class_count(), 0);
  for (std::size_t t = 0; t < u.trees.size(); ++t) {
    ++votes[forest().trees()[t].rules()[u.trees[t]].conclusion];
  }
  for (std::size_t c = 0; c < votes.size(); ++c) {
    if (c != u.cls && votes[c] >= votes[u.cls]) return 0;
  }
  return 1;
}

int PlausibilityModel::plausibility(const Assignment& u) const {
  int p = class_factor(u);
  for (std::size_t t = 0; p != 0 && t < u.trees.size(); ++t) p *= tree_factor(t, u);
  return p;
}

Output PlausibilityModel::complete(std::span<const std::uint32_t> cells, Assignment& u) const {
  u.features.assign(cells.begin(), cells.end());
  u.trees.resize(forest().tree_count());
  symbolic_.active_rules(cells, u.trees);
  std::vector<std::uint32_t> votes(forest().class_count(), 0);
  for (std::size_t t = 0; t < u.trees.size(); ++t) {
    ++votes[forest().trees()[t].rules()[u.trees[t]].conclusion];
  }
  Output out = majority(votes);
  if (out) u.cls = static_cast<std::uint32_t>(*out);
  return out;
}

Labelling labelling_from_assignment(const Bag& bag, const Assignment& u) {
  Labelling labelling(bag.size(), Label::kOut);
  for (ArgumentId a = 0; a < bag.size(); ++a) {
    const Argument& arg = bag.argument(a);
    bool in = false;
    switch (arg.kind) {
      case ArgumentKind::kFeature:
        in = u.features[arg.first] == arg.second;
        break;
      case ArgumentKind::kRule:
        in = u.trees[arg.first] == arg.second;
        break;
      case ArgumentKind::kClass:
        in = u.cls == arg.first;
        break;
    }
    if (in) labelling[a] = Label::kIn;
  }
  return labelling;
}

ExactCounts exact_counts(const PlausibilityModel& model, std::span<const QuerySpec> queries,
                         std::uint64_t cap) {
  for (const QuerySpec& q : queries) validate_query(model.partition(), q);
  ExactCounts counts;
  counts.queries.resize(queries.size());
  // Tree and class variables are functions of the feature variables, so the
  // Gibbs support is exactly the set of non-ambiguous equivalence classes.
  for_each_class(model.partition(), cap, [&](std::span<const std::uint32_t> cells) {
    ++counts.total;
    Output out = model.symbolic().classify(cells);
    if (!out) {
      ++counts.ambiguous;
      return;
    }
    ++counts.z;
    for (std::size_t k = 0; k < queries.size(); ++k) {
      if (!queries[k].condition.matches(cells, *out)) continue;
      ++counts.queries[k].denominator;
      if (queries[k].target.matches(cells, *out)) ++counts.queries[k].numerator;
    }
  });
  return counts;
}

std::uint64_t partition_function_exact(const PlausibilityModel& model, std::uint64_t cap) {
  return exact_counts(model, {}, cap).z;
}

ExactProbability query_exact(const PlausibilityModel& model, const QuerySpec& query,
                             std::uint64_t cap) {
  ExactCounts counts = exact_counts(model, std::span<const QuerySpec>(&query, 1), cap);
  const QueryCount& q = counts.queries[0];
  if (q.denominator == 0) {
    throw Error(ErrorCode::kUnsatisfiable,
                "the condition has probability zero under the Gibbs distribution");
  }
  return {q.numerator, q.denominator};
}

}  // namespace rfx
