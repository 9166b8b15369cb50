#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "rfexplain/partition.hpp"

namespace rfx {

// Feature variable restricted to the contiguous working-space cells
// [first, last]. Atomic reasons use first == last.
struct FeatureConstraint {
  std::uint32_t feature = 0;
  std::uint32_t first = 0;
  std::uint32_t last = 0;

  bool matches(std::span<const std::uint32_t> cells) const {
    return cells[feature] >= first && cells[feature] <= last;
  }
  bool operator==(const FeatureConstraint&) const = default;
};

// Partial assignment over the class variable and feature variables.
struct PartialAssignment {
  std::optional<std::uint32_t> class_value;
  std::vector<FeatureConstraint> features;

  bool empty() const { return !class_value && features.empty(); }
  bool features_only() const { return !class_value; }
  bool matches(std::span<const std::uint32_t> cells, std::size_t cls) const {
    if (class_value && *class_value != cls) return false;
    for (const FeatureConstraint& c : features) {
      if (!c.matches(cells)) return false;
    }
    return true;
  }
  bool operator==(const PartialAssignment&) const = default;
};

// Conditional query P(target | condition) with disjoint scopes.
struct QuerySpec {
  PartialAssignment target;
  PartialAssignment condition;

  bool operator==(const QuerySpec&) const = default;
};

// Throws kInvalidArgument when the scopes overlap or a side repeats a variable.
void validate_query(const DomainPartition& partition, const QuerySpec& query);

// Parses "C=Pos|B=1,Age<=35". Each side is a comma-separated list of
// "name OP value" items with OP one of "=", "<=", ">". The class variable is
// written "class=<label>", or "C=<label>" when <label> is a class label. For a
// numeric feature "<= v" and "> v" select the cells below or above the
// partition boundary v, and "= v" the cell containing v.
QuerySpec parse_query(const DomainPartition& partition, std::string_view text);

// Set notation of a constraint: "{1}", "(-inf, 35]".
std::string constraint_set(const DomainPartition& partition, const FeatureConstraint& c);

// Renders a side in the report style, e.g. "'B'=1, 'Age'=(-inf, 35]".
std::string describe(const DomainPartition& partition, const PartialAssignment& side);
std::string describe(const DomainPartition& partition, const QuerySpec& query);

}  // namespace rfx
