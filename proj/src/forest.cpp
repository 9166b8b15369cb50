#include "rfexplain/forest.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <set>

#include "json.hpp"
#include "rfexplain/error.hpp"

namespace rfx {

using nlohmann::json;

std::string format_number(double value) {
  if (std::isinf(value)) return value > 0 ? "inf" : "-inf";
  char buffer[64];
  auto [end, ec] = std::to_chars(buffer, buffer + sizeof buffer, value);
  if (ec != std::errc()) return std::to_string(value);
  return std::string(buffer, end);
}

Output majority(std::span<const std::uint32_t> votes) {
  Output best;
  std::uint32_t best_votes = 0;
  bool shared = false;
  for (std::size_t c = 0; c < votes.size(); ++c) {
    if (!best || votes[c] > best_votes) {
      best = c;
      best_votes = votes[c];
      shared = false;
    } else if (votes[c] == best_votes) {
      shared = true;
    }
  }
  if (shared) return std::nullopt;
  return best;
}

// ---------------------------------------------------------------------------
// Tree

namespace {

void collect_rules(const std::vector<Tree::Node>& nodes, std::size_t n,
                   std::vector<FeatureLiteral>& path, std::vector<Rule>& rules,
                   std::vector<std::size_t>& leaf_rule) {
  const Tree::Node& node = nodes[n];
  if (node.leaf) {
    leaf_rule[n] = rules.size();
    rules.push_back(Rule{path, node.label});
    return;
  }
  for (bool branch : {true, false}) {
    FeatureLiteral literal{node.test, branch};
    // Repeated tests on one path contribute a single literal.
    bool fresh = std::find(path.begin(), path.end(), literal) == path.end();
    if (fresh) path.push_back(literal);
    collect_rules(nodes, static_cast<std::size_t>(branch ? node.on_true : node.on_false),
                  path, rules, leaf_rule);
    if (fresh) path.pop_back();
  }
}

}  // namespace

Tree::Tree(std::vector<Node> nodes) : nodes_(std::move(nodes)) {
  if (nodes_.empty()) throw Error(ErrorCode::kParse, "empty tree");
  std::vector<bool> seen(nodes_.size(), false);
  std::vector<std::size_t> stack{0};
  while (!stack.empty()) {
    std::size_t n = stack.back();
    stack.pop_back();
    if (seen[n]) throw Error(ErrorCode::kParse, "tree node reached twice");
    seen[n] = true;
    if (nodes_[n].leaf) continue;
    for (std::int32_t child : {nodes_[n].on_true, nodes_[n].on_false}) {
      if (child < 0 || static_cast<std::size_t>(child) >= nodes_.size()) {
        throw Error(ErrorCode::kParse, "tree node has a missing child");
      }
      stack.push_back(static_cast<std::size_t>(child));
    }
  }
  if (std::find(seen.begin(), seen.end(), false) != seen.end()) {
    throw Error(ErrorCode::kParse, "tree has unreachable nodes");
  }
  // Canonical pre-order layout so that equality is structural.
  std::vector<Node> ordered;
  ordered.reserve(nodes_.size());
  auto place = [&](auto&& self, std::size_t n) -> std::int32_t {
    auto at = static_cast<std::int32_t>(ordered.size());
    ordered.push_back(nodes_[n]);
    if (!nodes_[n].leaf) {
      std::int32_t t = self(self, static_cast<std::size_t>(nodes_[n].on_true));
      std::int32_t f = self(self, static_cast<std::size_t>(nodes_[n].on_false));
      ordered[static_cast<std::size_t>(at)].on_true = t;
      ordered[static_cast<std::size_t>(at)].on_false = f;
      ordered[static_cast<std::size_t>(at)].label = 0;
    } else {
      ordered[static_cast<std::size_t>(at)].on_true = kNoChild;
      ordered[static_cast<std::size_t>(at)].on_false = kNoChild;
      ordered[static_cast<std::size_t>(at)].test = FeatureCondition{};
    }
    return at;
  };
  place(place, 0);
  nodes_ = std::move(ordered);
  leaf_rule_.assign(nodes_.size(), 0);
  std::vector<FeatureLiteral> path;
  collect_rules(nodes_, 0, path, rules_, leaf_rule_);
}

bool condition_holds(const FeatureCondition& condition, const Input& input) {
  double v = input[condition.feature];
  if (condition.op == TestOp::kEquals) {
    return static_cast<std::size_t>(v) == condition.category;
  }
  return v <= condition.threshold;
}

bool literal_holds(const FeatureLiteral& literal, const Input& input) {
  return condition_holds(literal.condition, input) == literal.positive;
}

bool premise_holds(const Rule& rule, const Input& input) {
  return std::all_of(rule.premise.begin(), rule.premise.end(),
                     [&](const FeatureLiteral& l) { return literal_holds(l, input); });
}

std::size_t Tree::active_rule_index(const Input& input) const {
  return active_rule_index(
      [&](const FeatureCondition& c) { return condition_holds(c, input); });
}

// ---------------------------------------------------------------------------
// Forest

Forest::Forest(std::vector<Feature> features, std::vector<std::string> classes,
               std::vector<Tree> trees)
    : features_(std::move(features)),
      classes_(std::move(classes)),
      trees_(std::move(trees)) {
  validate();
}

void Forest::validate() const {
  if (classes_.size() < 2) {
    throw Error(ErrorCode::kParse, "a forest needs at least two classes");
  }
  std::set<std::string> labels(classes_.begin(), classes_.end());
  if (labels.size() != classes_.size()) {
    throw Error(ErrorCode::kParse, "duplicate class label");
  }
  std::set<std::string> names;
  for (const Feature& f : features_) {
    if (!names.insert(f.name).second) {
      throw Error(ErrorCode::kParse, "duplicate feature name '" + f.name + "'");
    }
    if (f.kind == FeatureKind::kCategorical) {
      if (f.values.empty()) {
        throw Error(ErrorCode::kParse, "categorical feature '" + f.name + "' has no values");
      }
      std::set<std::string> distinct(f.values.begin(), f.values.end());
      if (distinct.size() != f.values.size()) {
        throw Error(ErrorCode::kParse, "categorical feature '" + f.name + "' repeats a value");
      }
    } else if (!f.values.empty()) {
      throw Error(ErrorCode::kParse, "numeric feature '" + f.name + "' declares values");
    }
  }
  for (const Tree& tree : trees_) {
    for (const Tree::Node& node : tree.nodes()) {
      if (node.leaf) {
        if (node.label >= classes_.size()) {
          throw Error(ErrorCode::kParse, "leaf class index out of range");
        }
        continue;
      }
      const FeatureCondition& test = node.test;
      if (test.feature >= features_.size()) {
        throw Error(ErrorCode::kParse,
                    "unknown feature reference " + std::to_string(test.feature));
      }
      const Feature& f = features_[test.feature];
      if (test.op == TestOp::kEquals) {
        if (f.kind != FeatureKind::kCategorical) {
          throw Error(ErrorCode::kParse, "operator 'eq' used on numeric feature '" + f.name + "'");
        }
        if (test.category >= f.values.size()) {
          throw Error(ErrorCode::kParse, "test value outside the domain of '" + f.name + "'");
        }
      } else {
        if (f.kind != FeatureKind::kNumeric) {
          throw Error(ErrorCode::kParse,
                      "operator 'le' used on categorical feature '" + f.name + "'");
        }
        if (!std::isfinite(test.threshold)) {
          throw Error(ErrorCode::kParse, "non-finite threshold on '" + f.name + "'");
        }
      }
    }
  }
}

std::size_t Forest::rule_count() const {
  std::size_t n = 0;
  for (const Tree& t : trees_) n += t.leaf_count();
  return n;
}

std::size_t Forest::feature_index(std::string_view name) const {
  for (std::size_t i = 0; i < features_.size(); ++i) {
    if (features_[i].name == name) return i;
  }
  throw Error(ErrorCode::kInvalidArgument, "unknown feature '" + std::string(name) + "'");
}

std::optional<std::size_t> Forest::class_index(std::string_view label) const {
  for (std::size_t c = 0; c < classes_.size(); ++c) {
    if (classes_[c] == label) return c;
  }
  return std::nullopt;
}

std::vector<std::uint32_t> Forest::votes(const Input& input) const {
  std::vector<std::uint32_t> counts(classes_.size(), 0);
  for (const Tree& tree : trees_) ++counts[tree.active_rule(input).conclusion];
  return counts;
}

Output Forest::classify(const Input& input) const {
  auto counts = votes(input);
  return majority(counts);
}

Input Forest::parse_input(std::span<const std::string> values) const {
  if (values.size() != features_.size()) {
    throw Error(ErrorCode::kInvalidArgument,
                "input needs " + std::to_string(features_.size()) + " values");
  }
  Input input(features_.size());
  for (std::size_t i = 0; i < features_.size(); ++i) {
    const Feature& f = features_[i];
    if (f.kind == FeatureKind::kCategorical) {
      auto it = std::find(f.values.begin(), f.values.end(), values[i]);
      if (it == f.values.end()) {
        throw Error(ErrorCode::kInvalidArgument,
                    "value '" + values[i] + "' not in the domain of '" + f.name + "'");
      }
      input[i] = static_cast<double>(it - f.values.begin());
    } else {
      const std::string& text = values[i];
      double v = 0;
      auto [end, ec] = std::from_chars(text.data(), text.data() + text.size(), v);
      if (ec != std::errc() || end != text.data() + text.size()) {
        throw Error(ErrorCode::kInvalidArgument,
                    "value '" + text + "' for '" + f.name + "' is not a number");
      }
      input[i] = v;
    }
  }
  return input;
}

std::string Forest::describe(const FeatureCondition& c) const {
  const Feature& f = features_[c.feature];
  if (c.op == TestOp::kEquals) return f.name + "=" + f.values[c.category];
  return f.name + "<=" + format_number(c.threshold);
}

std::string Forest::describe(const FeatureLiteral& l) const {
  if (l.positive) return describe(l.condition);
  const Feature& f = features_[l.condition.feature];
  if (l.condition.op == TestOp::kEquals) {
    return f.name + "!=" + f.values[l.condition.category];
  }
  return f.name + ">" + format_number(l.condition.threshold);
}

std::string Forest::describe(const Rule& rule) const {
  std::string out = "{";
  for (std::size_t k = 0; k < rule.premise.size(); ++k) {
    if (k) out += ", ";
    out += describe(rule.premise[k]);
  }
  return out + "} -> " + classes_[rule.conclusion];
}

// ---------------------------------------------------------------------------
// Interchange format

namespace {

[[noreturn]] void malformed(const std::string& what) {
  throw Error(ErrorCode::kParse, "malformed forest document: " + what);
}

const json& member(const json& object, const char* key) {
  auto it = object.find(key);
  if (it == object.end()) malformed(std::string("missing \"") + key + "\"");
  return *it;
}

std::string categorical_text(const json& value) {
  if (value.is_string()) return value.get<std::string>();
  if (value.is_number_integer()) return std::to_string(value.get<long long>());
  if (value.is_number()) return format_number(value.get<double>());
  malformed("categorical value must be a string or number");
}

std::int32_t parse_node(const json& node, const std::vector<Feature>& features,
                        std::vector<Tree::Node>& out) {
  if (!node.is_object() || node.empty()) throw Error(ErrorCode::kParse, "empty tree");
  auto index = static_cast<std::int32_t>(out.size());
  out.emplace_back();
  if (node.contains("leaf")) {
    const json& leaf = node["leaf"];
    if (!leaf.is_number_integer() || leaf.get<long long>() < 0) {
      malformed("leaf must be a non-negative class index");
    }
    out[static_cast<std::size_t>(index)].leaf = true;
    out[static_cast<std::size_t>(index)].label = leaf.get<std::size_t>();
    return index;
  }
  const json& test = member(node, "test");
  if (!test.is_object()) malformed("test must be an object");
  const json& feature = member(test, "feature");
  if (!feature.is_number_integer() || feature.get<long long>() < 0) {
    malformed("test feature must be a non-negative index");
  }
  FeatureCondition condition;
  condition.feature = feature.get<std::size_t>();
  if (condition.feature >= features.size()) {
    throw Error(ErrorCode::kParse,
                "unknown feature reference " + std::to_string(condition.feature));
  }
  const Feature& f = features[condition.feature];
  const json& op = member(test, "op");
  const json& value = member(test, "value");
  if (op == "eq") {
    if (f.kind != FeatureKind::kCategorical) {
      throw Error(ErrorCode::kParse, "operator 'eq' used on numeric feature '" + f.name + "'");
    }
    condition.op = TestOp::kEquals;
    std::string text = categorical_text(value);
    auto it = std::find(f.values.begin(), f.values.end(), text);
    if (it == f.values.end()) {
      throw Error(ErrorCode::kParse,
                  "value '" + text + "' not in the domain of '" + f.name + "'");
    }
    condition.category = static_cast<std::size_t>(it - f.values.begin());
  } else if (op == "le") {
    if (f.kind != FeatureKind::kNumeric) {
      throw Error(ErrorCode::kParse, "operator 'le' used on categorical feature '" + f.name + "'");
    }
    if (!value.is_number()) malformed("'le' threshold must be a number");
    condition.op = TestOp::kLessEqual;
    condition.threshold = value.get<double>();
  } else {
    malformed("op must be \"eq\" or \"le\"");
  }
  out[static_cast<std::size_t>(index)].leaf = false;
  out[static_cast<std::size_t>(index)].test = condition;
  std::int32_t on_true = parse_node(member(node, "true"), features, out);
  std::int32_t on_false = parse_node(member(node, "false"), features, out);
  out[static_cast<std::size_t>(index)].on_true = on_true;
  out[static_cast<std::size_t>(index)].on_false = on_false;
  return index;
}

json node_json(const Forest& forest, const Tree& tree, std::size_t n) {
  const Tree::Node& node = tree.nodes()[n];
  if (node.leaf) return json{{"leaf", node.label}};
  json test{{"feature", node.test.feature}};
  if (node.test.op == TestOp::kEquals) {
    test["op"] = "eq";
    test["value"] = forest.features()[node.test.feature].values[node.test.category];
  } else {
    test["op"] = "le";
    test["value"] = node.test.threshold;
  }
  return json{{"test", test},
              {"true", node_json(forest, tree, static_cast<std::size_t>(node.on_true))},
              {"false", node_json(forest, tree, static_cast<std::size_t>(node.on_false))}};
}

}  // namespace

Forest Forest::parse(std::string_view document) {
  json doc;
  try {
    doc = json::parse(document);
  } catch (const json::parse_error& e) {
    throw Error(ErrorCode::kParse, std::string("malformed forest document: ") + e.what());
  }
  if (!doc.is_object()) malformed("top level must be an object");

  std::vector<Feature> features;
  const json& jfeatures = member(doc, "features");
  if (!jfeatures.is_array()) malformed("\"features\" must be an array");
  for (const json& jf : jfeatures) {
    if (!jf.is_object()) malformed("feature must be an object");
    Feature f;
    const json& name = member(jf, "name");
    if (!name.is_string()) malformed("feature name must be a string");
    f.name = name.get<std::string>();
    const json& kind = member(jf, "kind");
    if (kind == "categorical") {
      f.kind = FeatureKind::kCategorical;
      const json& values = member(jf, "values");
      if (!values.is_array()) malformed("categorical values must be an array");
      for (const json& v : values) f.values.push_back(categorical_text(v));
    } else if (kind == "numeric") {
      f.kind = FeatureKind::kNumeric;
    } else {
      malformed("feature kind must be \"categorical\" or \"numeric\"");
    }
    features.push_back(std::move(f));
  }

  std::vector<std::string> classes;
  const json& jclasses = member(doc, "classes");
  if (!jclasses.is_array()) malformed("\"classes\" must be an array");
  for (const json& c : jclasses) {
    if (!c.is_string()) malformed("class labels must be strings");
    classes.push_back(c.get<std::string>());
  }

  std::vector<Tree> trees;
  const json& jtrees = member(doc, "trees");
  if (!jtrees.is_array()) malformed("\"trees\" must be an array");
  for (const json& jt : jtrees) {
    if (!jt.is_object() || !jt.contains("root") || jt["root"].is_null()) {
      throw Error(ErrorCode::kParse, "empty tree");
    }
    std::vector<Tree::Node> nodes;
    parse_node(jt["root"], features, nodes);
    trees.emplace_back(std::move(nodes));
  }
  return Forest(std::move(features), std::move(classes), std::move(trees));
}

std::string Forest::serialize() const {
  json doc;
  doc["features"] = json::array();
  for (const Feature& f : features_) {
    json jf{{"name", f.name}};
    if (f.kind == FeatureKind::kCategorical) {
      jf["kind"] = "categorical";
      jf["values"] = f.values;
    } else {
      jf["kind"] = "numeric";
    }
    doc["features"].push_back(std::move(jf));
  }
  doc["classes"] = classes_;
  doc["trees"] = json::array();
  for (const Tree& t : trees_) doc["trees"].push_back(json{{"root", node_json(*this, t, 0)}});
  return doc.dump();
}

}  // namespace rfx
