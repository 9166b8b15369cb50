#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "rfexplain/forest.hpp"
#include "rfexplain/partition.hpp"

namespace rfx {

enum class ArgumentKind : std::uint8_t { kClass, kRule, kFeature };

struct Argument {
  ArgumentKind kind = ArgumentKind::kClass;
  // kClass: (class, 0); kRule: (tree, rule); kFeature: (feature, cell).
  std::uint32_t first = 0;
  std::uint32_t second = 0;

  bool operator==(const Argument&) const = default;
};

enum class Label : std::uint8_t { kIn, kOut, kUndecided };

using Labelling = std::vector<Label>;
using ArgumentId = std::uint32_t;
using Edge = std::pair<ArgumentId, ArgumentId>;

// Bipolar argumentation graph.
class Bag {
 public:
  Bag(std::vector<Argument> arguments, std::vector<Edge> attacks, std::vector<Edge> supports);

  // The explanation BAG of a forest: class arguments first, then rule
  // arguments tree by tree, then feature arguments over working-space cells.
  static Bag explanation(const Forest& forest, const DomainPartition& partition);

  std::size_t size() const { return arguments_.size(); }
  const std::vector<Argument>& arguments() const { return arguments_; }
  const Argument& argument(ArgumentId id) const { return arguments_[id]; }

  const std::vector<ArgumentId>& attackers(ArgumentId id) const { return attackers_[id]; }
  const std::vector<ArgumentId>& supporters(ArgumentId id) const { return supporters_[id]; }
  // Sorted by (source, target).
  const std::vector<Edge>& attacks() const { return attacks_; }
  const std::vector<Edge>& supports() const { return supports_; }

  // Id lookups; valid for explanation BAGs only.
  ArgumentId class_argument(std::size_t c) const;
  ArgumentId rule_argument(std::size_t tree, std::size_t rule) const;
  ArgumentId feature_argument(std::size_t feature, std::size_t cell) const;
  std::size_t class_count() const { return class_count_; }

 private:
  std::vector<Argument> arguments_;
  std::vector<Edge> attacks_;
  std::vector<Edge> supports_;
  std::vector<std::vector<ArgumentId>> attackers_;
  std::vector<std::vector<ArgumentId>> supporters_;

  std::size_t class_count_ = 0;
  std::vector<std::size_t> rule_offset_;     // per tree
  std::vector<std::size_t> feature_offset_;  // per feature
};

bool attackers_dominate(const Bag& bag, const Labelling& labelling, ArgumentId arg);
bool supporters_dominate(const Bag& bag, const Labelling& labelling, ArgumentId arg);

bool is_bicomplete(const Bag& bag, const Labelling& labelling);
bool is_bistable(const Bag& bag, const Labelling& labelling);

// L_x for an input x, or equivalently for its equivalence class.
Labelling labelling_from_class(const Bag& bag, const SymbolicForest& forest,
                               std::span<const std::uint32_t> cells);
Labelling labelling_from_input(const Bag& bag, const SymbolicForest& forest, const Input& input);

// Bi-stability of L_x and the class it accepts, read off the tree votes.
// A class argument is in when its votes exceed all other votes together, out
// when they fall short, undecided on equality. With two classes L_x is
// bi-stable exactly when the forest output is defined. With more classes the
// two notions part: a plurality winner short of a majority leaves L_x
// undecided, and a spread vote (1/1/1) gives a bi-stable L_x accepting no class.
struct LxStatus {
  bool bistable = false;
  Output accepted;
};
LxStatus lx_status(const SymbolicForest& forest, std::span<const std::uint32_t> cells);

// Text dump: "arg <id> <kind> <detail>", then "att <src> <dst>", then
// "sup <src> <dst>", each section in ascending id order.
std::string export_bag(const Bag& bag, const Forest& forest, const DomainPartition& partition);
std::string describe_argument(const Bag& bag, const Forest& forest,
                              const DomainPartition& partition, ArgumentId id);

struct ReasonCheck {
  bool holds = false;
  // No bi-stable labelling satisfies the premise side; `holds` is then true.
  bool vacuous = false;
  // Bi-stable labellings on the premise side (accepting the reason for
  // sufficiency, accepting the class for necessity).
  std::uint64_t support = 0;
};

struct NecessaryFeatures {
  std::vector<ArgumentId> arguments;
  bool vacuous = false;
};

// Exact reasoning over bi-stable labellings of an explanation BAG, enumerated
// through the equivalence classes whose L_x is bi-stable.
class ExactReasoner {
 public:
  ExactReasoner(const Forest& forest, const DomainPartition& partition, const Bag& bag,
                std::uint64_t cap = kDefaultMaxExactClasses);

  // Calls visit(cells, accepted class or nullopt) for every bi-stable
  // labelling and returns their number.
  std::uint64_t enumerate_bistable(
      const std::function<void(std::span<const std::uint32_t>, Output)>& visit) const;
  std::uint64_t bistable_count() const;

  ReasonCheck is_sufficient(std::span<const ArgumentId> feature_args, std::size_t cls) const;
  ReasonCheck is_necessary(std::span<const ArgumentId> feature_args, std::size_t cls) const;
  NecessaryFeatures maximal_necessary_features(std::size_t cls) const;

  const Bag& bag() const { return *bag_; }
  const SymbolicForest& symbolic() const { return symbolic_; }

 private:
  // (feature, cell) pairs of a feature-argument set; throws on other kinds.
  std::vector<std::pair<std::uint32_t, std::uint32_t>> feature_cells(
      std::span<const ArgumentId> args) const;

  const DomainPartition* partition_;
  const Bag* bag_;
  SymbolicForest symbolic_;
  std::uint64_t cap_;
};

}  // namespace rfx
