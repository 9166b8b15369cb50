#pragma once

#include <concepts>
#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace rfx {

enum class FeatureKind { kCategorical, kNumeric };

struct Feature {
  std::string name;
  FeatureKind kind = FeatureKind::kCategorical;
  // Declared domain; empty for numeric features.
  std::vector<std::string> values;

  bool operator==(const Feature&) const = default;
};

enum class TestOp { kEquals, kLessEqual };

// X = v on a categorical feature, X <= t on a numeric one.
struct FeatureCondition {
  std::size_t feature = 0;
  TestOp op = TestOp::kEquals;
  std::size_t category = 0;  // index into Feature::values, kEquals only
  double threshold = 0.0;    // kLessEqual only

  bool operator==(const FeatureCondition&) const = default;
};

struct FeatureLiteral {
  FeatureCondition condition;
  bool positive = true;

  bool operator==(const FeatureLiteral&) const = default;
};

struct Rule {
  std::vector<FeatureLiteral> premise;
  std::size_t conclusion = 0;

  bool operator==(const Rule&) const = default;
};

// Input vector. Numeric features carry their value, categorical features the
// index of the value in Feature::values.
using Input = std::vector<double>;

// Forest output: a class index, or nullopt for a tie.
using Output = std::optional<std::size_t>;

// Majority vote with strict maximum; a shared maximum is a tie.
Output majority(std::span<const std::uint32_t> votes);

class Tree {
 public:
  static constexpr std::int32_t kNoChild = -1;

  struct Node {
    bool leaf = true;
    std::size_t label = 0;  // leaf class
    FeatureCondition test;  // internal nodes
    std::int32_t on_true = kNoChild;
    std::int32_t on_false = kNoChild;

    bool operator==(const Node&) const = default;
  };

  // Nodes in any order with the root at index 0. Throws rfx::Error when the
  // node graph is not a tree.
  explicit Tree(std::vector<Node> nodes);

  const std::vector<Node>& nodes() const { return nodes_; }
  // One rule per leaf, in depth-first order (true branch first).
  const std::vector<Rule>& rules() const { return rules_; }
  std::size_t leaf_count() const { return rules_.size(); }

  // Descends from the root, deciding each test with `satisfied`, and returns
  // the index of the reached leaf's rule.
  template <class Pred>
    requires std::predicate<Pred&, const FeatureCondition&>
  std::size_t active_rule_index(Pred&& satisfied) const {
    std::size_t n = 0;
    while (!nodes_[n].leaf) {
      n = static_cast<std::size_t>(satisfied(nodes_[n].test) ? nodes_[n].on_true
                                                              : nodes_[n].on_false);
    }
    return leaf_rule_[n];
  }

  std::size_t active_rule_index(const Input& input) const;
  const Rule& active_rule(const Input& input) const {
    return rules_[active_rule_index(input)];
  }

  bool operator==(const Tree& other) const { return nodes_ == other.nodes_; }

 private:
  std::vector<Node> nodes_;
  std::vector<Rule> rules_;
  std::vector<std::size_t> leaf_rule_;  // node index -> rule index
};

bool condition_holds(const FeatureCondition& condition, const Input& input);
bool literal_holds(const FeatureLiteral& literal, const Input& input);
bool premise_holds(const Rule& rule, const Input& input);

class Forest {
 public:
  Forest(std::vector<Feature> features, std::vector<std::string> classes,
         std::vector<Tree> trees);

  // Parses the JSON interchange document.
  static Forest parse(std::string_view document);
  std::string serialize() const;

  const std::vector<Feature>& features() const { return features_; }
  const std::vector<std::string>& classes() const { return classes_; }
  const std::vector<Tree>& trees() const { return trees_; }

  std::size_t feature_count() const { return features_.size(); }
  std::size_t class_count() const { return classes_.size(); }
  std::size_t tree_count() const { return trees_.size(); }
  std::size_t rule_count() const;

  // Feature index by name; throws on unknown names.
  std::size_t feature_index(std::string_view name) const;
  std::optional<std::size_t> class_index(std::string_view label) const;

  std::vector<std::uint32_t> votes(const Input& input) const;
  Output classify(const Input& input) const;

  // Builds an Input from one textual value per feature.
  Input parse_input(std::span<const std::string> values) const;

  std::string describe(const FeatureCondition& condition) const;
  std::string describe(const FeatureLiteral& literal) const;
  std::string describe(const Rule& rule) const;

  bool operator==(const Forest&) const = default;

 private:
  void validate() const;

  std::vector<Feature> features_;
  std::vector<std::string> classes_;
  std::vector<Tree> trees_;
};

// Shortest round-trip decimal form of a double ("35", "5.14").
std::string format_number(double value);

}  // namespace rfx
