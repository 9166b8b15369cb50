#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <limits>
#include <span>
#include <string>
#include <vector>

#include "rfexplain/forest.hpp"

namespace rfx {

inline constexpr std::uint64_t kDefaultMaxExactClasses = std::uint64_t{1} << 22;

// One cell of a feature's domain partition: a set of categorical values, or the
// half-open numeric interval (lower, upper].
struct PartitionSet {
  FeatureKind kind = FeatureKind::kCategorical;
  std::vector<std::size_t> categories;
  double lower = -std::numeric_limits<double>::infinity();
  double upper = std::numeric_limits<double>::infinity();

  bool contains(double value) const;
  // "{1}", "{0, 1}", "(-inf, 35]", "(35, inf)".
  std::string to_string(const Feature& feature) const;
};

// A point of the quotient space: one cell index per feature.
struct EquivalenceClass {
  std::vector<std::uint32_t> cells;

  bool operator==(const EquivalenceClass&) const = default;
};

// Partition of every feature domain into the finest cells the forest's
// conditions can tell apart.
//
// Two index spaces exist. The full space has one cell per categorical value and
// one per numeric interval, as the definition prescribes. The working space,
// used for enumeration, sampling, the BAG and the Markov model, collapses every
// feature no tree tests to a single cell covering its whole domain. Features
// that are tested have identical cells in both spaces.
class DomainPartition {
 public:
  explicit DomainPartition(const Forest& forest);

  std::size_t feature_count() const { return sets_.size(); }

  // Full-space cells of feature i (n_i of them).
  const std::vector<PartitionSet>& sets(std::size_t i) const { return sets_[i]; }
  std::size_t set_count(std::size_t i) const { return sets_[i].size(); }
  bool used(std::size_t i) const { return used_[i]; }
  // Sorted, deduplicated thresholds of a numeric feature.
  const std::vector<double>& thresholds(std::size_t i) const { return thresholds_[i]; }

  // Working-space cells.
  std::size_t cell_count(std::size_t i) const { return used_[i] ? sets_[i].size() : 1; }
  const PartitionSet& cell(std::size_t i, std::size_t j) const {
    return used_[i] ? sets_[i][j] : collapsed_[i];
  }
  std::string describe_cell(std::size_t i, std::size_t j) const;

  // Product of working-space cell counts. Throws kCapExceeded on overflow.
  std::uint64_t class_count() const;
  // Full-space classes represented by each working-space class.
  std::uint64_t collapsed_multiplicity() const;

  // Full-space characteristic vector of an input.
  EquivalenceClass characteristic(const Input& input) const;
  // Maps a full-space class to the working space.
  EquivalenceClass collapse(const EquivalenceClass& full) const;
  bool indistinguishable(const Input& a, const Input& b) const;

  // Cell index that a threshold test compares against: a cell j satisfies
  // "X <= t" iff j <= threshold_index(i, t).
  std::uint32_t threshold_index(std::size_t i, double threshold) const;
  // Whether every value of working-space cell j of the condition's feature
  // satisfies the condition (the alternative being that none does).
  bool satisfies(const FeatureCondition& condition, std::uint32_t j) const;

  const Forest& forest() const { return *forest_; }

 private:
  const Forest* forest_;
  std::vector<std::vector<PartitionSet>> sets_;
  std::vector<std::vector<double>> thresholds_;
  std::vector<bool> used_;
  std::vector<PartitionSet> collapsed_;
};

// The forest compiled against a partition: every test becomes a comparison of a
// cell index, so evaluation on an equivalence class never touches values.
class SymbolicForest {
 public:
  SymbolicForest(const Forest& forest, const DomainPartition& partition);

  std::size_t active_rule(std::size_t tree, std::span<const std::uint32_t> cells) const;
  // Rule index per tree, written into `rules`.
  void active_rules(std::span<const std::uint32_t> cells, std::span<std::uint32_t> rules) const;
  Output classify(std::span<const std::uint32_t> cells) const;

  const Forest& forest() const { return *forest_; }
  const DomainPartition& partition() const { return *partition_; }

 private:
  struct Node {
    std::uint32_t feature = 0;
    std::uint32_t bound = 0;  // category or threshold index
    bool equals = false;
    bool leaf = false;
    std::int32_t on_true = -1;
    std::int32_t on_false = -1;
    std::uint32_t rule = 0;
  };

  const Forest* forest_;
  const DomainPartition* partition_;
  std::vector<std::vector<Node>> trees_;
  std::vector<std::vector<std::uint32_t>> conclusions_;
};

Output classify_class(const Forest& forest, const DomainPartition& partition,
                      const EquivalenceClass& eq);

// Visits every working-space equivalence class in mixed-radix order (last
// feature fastest). Refuses with kCapExceeded when class_count() > cap.
void for_each_class(const DomainPartition& partition, std::uint64_t cap,
                    const std::function<void(std::span<const std::uint32_t>)>& visit);

struct AmbiguityCount {
  std::uint64_t ambiguous = 0;
  std::uint64_t total = 0;
  // Full-space classes per working-space class (unused categorical features).
  std::uint64_t multiplicity = 1;

  std::uint64_t ambiguous_full() const { return ambiguous * multiplicity; }
};

AmbiguityCount count_ambiguous_exact(const Forest& forest, const DomainPartition& partition,
                                     std::uint64_t cap = kDefaultMaxExactClasses);

}  // namespace rfx
