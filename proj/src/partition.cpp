#include "rfexplain/partition.hpp"

#include <algorithm>
#include <cmath>

#include "rfexplain/error.hpp"

namespace rfx {

bool PartitionSet::contains(double value) const {
  if (kind == FeatureKind::kCategorical) {
    return std::find(categories.begin(), categories.end(), static_cast<std::size_t>(value)) !=
           categories.end();
  }
  return lower < value && value <= upper;
}

std::string PartitionSet::to_string(const Feature& feature) const {
  if (kind == FeatureKind::kCategorical) {
    std::string out = "{";
    for (std::size_t k = 0; k < categories.size(); ++k) {
      if (k) out += ", ";
      out += feature.values[categories[k]];
    }
    return out + "}";
  }
  std::string out = "(" + format_number(lower) + ", " + format_number(upper);
  return out + (std::isinf(upper) ? ")" : "]");
}

DomainPartition::DomainPartition(const Forest& forest)
    : forest_(&forest),
      sets_(forest.feature_count()),
      thresholds_(forest.feature_count()),
      used_(forest.feature_count(), false),
      collapsed_(forest.feature_count()) {
  for (const Tree& tree : forest.trees()) {
    for (const Tree::Node& node : tree.nodes()) {
      if (node.leaf) continue;
      used_[node.test.feature] = true;
      if (node.test.op == TestOp::kLessEqual) {
        thresholds_[node.test.feature].push_back(node.test.threshold);
      }
    }
  }
  for (std::size_t i = 0; i < forest.feature_count(); ++i) {
    const Feature& f = forest.features()[i];
    PartitionSet& whole = collapsed_[i];
    whole.kind = f.kind;
    if (f.kind == FeatureKind::kCategorical) {
      for (std::size_t v = 0; v < f.values.size(); ++v) {
        sets_[i].push_back(PartitionSet{FeatureKind::kCategorical, {v}});
        whole.categories.push_back(v);
      }
      continue;
    }
    auto& t = thresholds_[i];
    std::sort(t.begin(), t.end());
    t.erase(std::unique(t.begin(), t.end()), t.end());
    double lower = -std::numeric_limits<double>::infinity();
    for (double v : t) {
      sets_[i].push_back(PartitionSet{FeatureKind::kNumeric, {}, lower, v});
      lower = v;
    }
    sets_[i].push_back(PartitionSet{FeatureKind::kNumeric, {}, lower,
                                    std::numeric_limits<double>::infinity()});
  }
}

std::string DomainPartition::describe_cell(std::size_t i, std::size_t j) const {
  return cell(i, j).to_string(forest_->features()[i]);
}

namespace {

std::uint64_t checked_product(std::uint64_t a, std::uint64_t b) {
  if (b != 0 && a > std::numeric_limits<std::uint64_t>::max() / b) {
    throw Error(ErrorCode::kCapExceeded, "equivalence-class count overflows 64 bits");
  }
  return a * b;
}

}  // namespace

std::uint64_t DomainPartition::class_count() const {
  std::uint64_t n = 1;
  for (std::size_t i = 0; i < sets_.size(); ++i) n = checked_product(n, cell_count(i));
  return n;
}

std::uint64_t DomainPartition::collapsed_multiplicity() const {
  std::uint64_t n = 1;
  for (std::size_t i = 0; i < sets_.size(); ++i) {
    if (!used_[i]) n = checked_product(n, sets_[i].size());
  }
  return n;
}

EquivalenceClass DomainPartition::characteristic(const Input& input) const {
  if (input.size() != sets_.size()) {
    throw Error(ErrorCode::kInvalidArgument, "input has the wrong number of features");
  }
  EquivalenceClass eq;
  eq.cells.resize(sets_.size());
  for (std::size_t i = 0; i < sets_.size(); ++i) {
    const Feature& f = forest_->features()[i];
    double v = input[i];
    if (f.kind == FeatureKind::kCategorical) {
      if (!(v >= 0) || v != std::floor(v) || v >= static_cast<double>(f.values.size())) {
        throw Error(ErrorCode::kInvalidArgument,
                    "categorical value outside the domain of '" + f.name + "'");
      }
      eq.cells[i] = static_cast<std::uint32_t>(v);
    } else {
      if (std::isnan(v)) {
        throw Error(ErrorCode::kInvalidArgument, "NaN value for '" + f.name + "'");
      }
      const auto& t = thresholds_[i];
      eq.cells[i] = static_cast<std::uint32_t>(std::lower_bound(t.begin(), t.end(), v) - t.begin());
    }
  }
  return eq;
}

EquivalenceClass DomainPartition::collapse(const EquivalenceClass& full) const {
  EquivalenceClass eq = full;
  for (std::size_t i = 0; i < sets_.size(); ++i) {
    if (!used_[i]) eq.cells[i] = 0;
  }
  return eq;
}

bool DomainPartition::indistinguishable(const Input& a, const Input& b) const {
  return characteristic(a) == characteristic(b);
}

std::uint32_t DomainPartition::threshold_index(std::size_t i, double threshold) const {
  const auto& t = thresholds_[i];
  auto it = std::lower_bound(t.begin(), t.end(), threshold);
  if (it == t.end() || *it != threshold) {
    throw Error(ErrorCode::kInvalidArgument, "threshold is not a partition boundary");
  }
  return static_cast<std::uint32_t>(it - t.begin());
}

bool DomainPartition::satisfies(const FeatureCondition& condition, std::uint32_t j) const {
  if (condition.op == TestOp::kEquals) return j == condition.category;
  return j <= threshold_index(condition.feature, condition.threshold);
}

// ---------------------------------------------------------------------------

SymbolicForest::SymbolicForest(const Forest& forest, const DomainPartition& partition)
    : forest_(&forest), partition_(&partition) {
  for (const Tree& tree : forest.trees()) {
    std::vector<Node> nodes;
    nodes.reserve(tree.nodes().size());
    // Leaf rule indices follow the same depth-first order as Tree::rules().
    std::uint32_t next_rule = 0;
    auto compile = [&](auto&& self, std::size_t n) -> std::int32_t {
      const Tree::Node& src = tree.nodes()[n];
      auto at = static_cast<std::int32_t>(nodes.size());
      nodes.emplace_back();
      if (src.leaf) {
        nodes[static_cast<std::size_t>(at)].leaf = true;
        nodes[static_cast<std::size_t>(at)].rule = next_rule++;
        return at;
      }
      Node node;
      node.feature = static_cast<std::uint32_t>(src.test.feature);
      node.equals = src.test.op == TestOp::kEquals;
      node.bound = node.equals ? static_cast<std::uint32_t>(src.test.category)
                               : partition.threshold_index(src.test.feature, src.test.threshold);
      node.on_true = self(self, static_cast<std::size_t>(src.on_true));
      node.on_false = self(self, static_cast<std::size_t>(src.on_false));
      nodes[static_cast<std::size_t>(at)] = node;
      return at;
    };
    compile(compile, 0);
    trees_.push_back(std::move(nodes));
    std::vector<std::uint32_t> conclusions;
    for (const Rule& r : tree.rules()) conclusions.push_back(static_cast<std::uint32_t>(r.conclusion));
    conclusions_.push_back(std::move(conclusions));
  }
}

std::size_t SymbolicForest::active_rule(std::size_t tree,
                                        std::span<const std::uint32_t> cells) const {
  const std::vector<Node>& nodes = trees_[tree];
  std::size_t n = 0;
  while (!nodes[n].leaf) {
    const Node& node = nodes[n];
    std::uint32_t c = cells[node.feature];
    bool holds = node.equals ? c == node.bound : c <= node.bound;
    n = static_cast<std::size_t>(holds ? node.on_true : node.on_false);
  }
  return nodes[n].rule;
}

void SymbolicForest::active_rules(std::span<const std::uint32_t> cells,
                                  std::span<std::uint32_t> rules) const {
  for (std::size_t t = 0; t < trees_.size(); ++t) {
    rules[t] = static_cast<std::uint32_t>(active_rule(t, cells));
  }
}

Output SymbolicForest::classify(std::span<const std::uint32_t> cells) const {
  // Small class counts dominate in practice; avoid a heap allocation for them.
  std::uint32_t stack_votes[16] = {};
  std::vector<std::uint32_t> heap_votes;
  std::span<std::uint32_t> votes;
  std::size_t classes = forest_->class_count();
  if (classes <= 16) {
    votes = std::span<std::uint32_t>(stack_votes, classes);
  } else {
    heap_votes.assign(classes, 0);
    votes = heap_votes;
  }
  for (std::size_t t = 0; t < trees_.size(); ++t) {
    ++votes[conclusions_[t][active_rule(t, cells)]];
  }
  return majority(votes);
}

Output classify_class(const Forest& forest, const DomainPartition& partition,
                      const EquivalenceClass& eq) {
  SymbolicForest symbolic(forest, partition);
  return symbolic.classify(eq.cells);
}

void for_each_class(const DomainPartition& partition, std::uint64_t cap,
                    const std::function<void(std::span<const std::uint32_t>)>& visit) {
  std::uint64_t total = partition.class_count();
  if (total > cap) {
    throw Error(ErrorCode::kCapExceeded,
                std::to_string(total) + " equivalence classes exceed the exact cap of " +
                    std::to_string(cap));
  }
  std::size_t k = partition.feature_count();
  std::vector<std::uint32_t> cells(k, 0);
  for (std::uint64_t n = 0; n < total; ++n) {
    visit(cells);
    for (std::size_t i = k; i-- > 0;) {
      if (++cells[i] < partition.cell_count(i)) break;
      cells[i] = 0;
    }
  }
}

AmbiguityCount count_ambiguous_exact(const Forest& forest, const DomainPartition& partition,
                                     std::uint64_t cap) {
  SymbolicForest symbolic(forest, partition);
  AmbiguityCount count;
  count.multiplicity = partition.collapsed_multiplicity();
  for_each_class(partition, cap, [&](std::span<const std::uint32_t> cells) {
    ++count.total;
    if (!symbolic.classify(cells)) ++count.ambiguous;
  });
  return count;
}

}  // namespace rfx
