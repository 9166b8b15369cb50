#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include "rfexplain/bag.hpp"
#include "rfexplain/forest.hpp"
#include "rfexplain/partition.hpp"
#include "rfexplain/query.hpp"

namespace rfx {

enum class VariableKind : std::uint8_t { kFeature, kTree, kClass };

struct RandomVariable {
  VariableKind kind = VariableKind::kFeature;
  std::uint32_t index = 0;  // feature or tree index; 0 for the class variable
  std::size_t domain_size = 0;
};

// Total assignment to the explanation random variables: a working-space cell
// per feature, a rule per tree and a class.
struct Assignment {
  std::vector<std::uint32_t> features;
  std::vector<std::uint32_t> trees;
  std::uint32_t cls = 0;

  bool operator==(const Assignment&) const = default;
};

// Markov network of a forest. Factors are deterministic and evaluated on
// demand; nothing is tabulated.
class PlausibilityModel {
 public:
  PlausibilityModel(const Forest& forest, const DomainPartition& partition);

  // Feature variables, then one tree variable per tree, then the class variable.
  const std::vector<RandomVariable>& variables() const { return variables_; }
  // Feature variables in the scope of a tree factor (besides its tree variable).
  const std::vector<std::uint32_t>& tree_scope(std::size_t tree) const { return scopes_[tree]; }

  int tree_factor(std::size_t tree, const Assignment& u) const;
  int class_factor(const Assignment& u) const;
  int plausibility(const Assignment& u) const;

  // Deterministic completion of a feature assignment: active rules and the
  // majority class. Returns the forest output; `u.cls` is left untouched on a
  // tie.
  Output complete(std::span<const std::uint32_t> cells, Assignment& u) const;

  const Forest& forest() const { return symbolic_.forest(); }
  const DomainPartition& partition() const { return symbolic_.partition(); }
  const SymbolicForest& symbolic() const { return symbolic_; }

 private:
  SymbolicForest symbolic_;
  std::vector<RandomVariable> variables_;
  std::vector<std::vector<std::uint32_t>> scopes_;
};

// L_u: arguments in exactly when their variable takes their value.
Labelling labelling_from_assignment(const Bag& bag, const Assignment& u);

struct QueryCount {
  std::uint64_t numerator = 0;    // target and condition hold
  std::uint64_t denominator = 0;  // condition holds
};

struct ExactCounts {
  std::uint64_t z = 0;  // non-ambiguous equivalence classes
  std::uint64_t ambiguous = 0;
  std::uint64_t total = 0;
  std::vector<QueryCount> queries;
};

// One enumeration pass over the equivalence classes, counting the Gibbs
// support and every query's numerator and denominator.
ExactCounts exact_counts(const PlausibilityModel& model, std::span<const QuerySpec> queries,
                         std::uint64_t cap = kDefaultMaxExactClasses);

std::uint64_t partition_function_exact(const PlausibilityModel& model,
                                       std::uint64_t cap = kDefaultMaxExactClasses);

struct ExactProbability {
  std::uint64_t numerator = 0;
  std::uint64_t denominator = 0;

  double value() const {
    return static_cast<double>(numerator) / static_cast<double>(denominator);
  }
};

// Throws kUnsatisfiable when the condition has no support.
ExactProbability query_exact(const PlausibilityModel& model, const QuerySpec& query,
                             std::uint64_t cap = kDefaultMaxExactClasses);

}  // namespace rfx
