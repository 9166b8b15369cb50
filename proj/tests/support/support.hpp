#pragma once

#include <array>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <random>
#include <span>
#include <stdexcept>
#include <sstream>
#include <string>
#include <vector>

#include "rfexplain/cnf.hpp"
#include "rfexplain/forest.hpp"
#include "rfexplain/partition.hpp"

namespace rfx::testing {

inline std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open " + path);
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

inline std::string fixture_path(const std::string& name) {
  return std::string(RFX_FIXTURE_DIR) + "/" + name;
}

inline Forest load_fixture(const std::string& name) {
  return Forest::parse(read_file(fixture_path(name)));
}

inline Forest f_med() { return load_fixture("f_med.json"); }

// A, B, C, Age feature indices of F_med.
inline constexpr std::size_t kA = 0, kB = 1, kC = 2, kAge = 3;
inline constexpr std::size_t kPos = 0, kNeg = 1;

// Hand-traced F_med output per (A, B, Age <= 35).
inline Output f_med_oracle(int a, int b, bool young) {
  int pos = 0;
  pos += (a == 1 || b == 1) ? 1 : 0;
  pos += (b == 1 && young) ? 1 : 0;
  if (pos == 2) return kPos;
  if (pos == 0) return kNeg;
  return std::nullopt;
}

struct RandomForestSpec {
  std::size_t max_features = 5;
  std::size_t max_trees = 5;
  std::size_t max_depth = 3;
  std::size_t classes = 2;
  bool numeric = false;  // make the last feature numeric
};

namespace detail {

inline void grow(std::vector<Tree::Node>& nodes, std::size_t at, std::size_t depth,
                 const std::vector<Feature>& features, const RandomForestSpec& spec,
                 std::mt19937_64& rng) {
  std::uniform_int_distribution<std::size_t> cls(0, spec.classes - 1);
  bool split = depth < spec.max_depth && std::bernoulli_distribution(depth == 0 ? 0.9 : 0.6)(rng);
  if (!split) {
    nodes[at].leaf = true;
    nodes[at].label = cls(rng);
    return;
  }
  std::size_t f = std::uniform_int_distribution<std::size_t>(0, features.size() - 1)(rng);
  Tree::Node& n = nodes[at];
  n.leaf = false;
  n.test.feature = f;
  if (features[f].kind == FeatureKind::kCategorical) {
    n.test.op = TestOp::kEquals;
    n.test.category = std::uniform_int_distribution<std::size_t>(0, 1)(rng);
  } else {
    n.test.op = TestOp::kLessEqual;
    n.test.threshold = static_cast<double>(std::uniform_int_distribution<int>(1, 4)(rng)) * 10.0;
  }
  auto t = static_cast<std::int32_t>(nodes.size());
  nodes.emplace_back();
  nodes.emplace_back();
  nodes[at].on_true = t;
  nodes[at].on_false = t + 1;
  grow(nodes, static_cast<std::size_t>(t), depth + 1, features, spec, rng);
  grow(nodes, static_cast<std::size_t>(t + 1), depth + 1, features, spec, rng);
}

}  // namespace detail

inline Forest random_forest(std::uint64_t seed, const RandomForestSpec& spec = {}) {
  std::mt19937_64 rng(seed);
  std::size_t nf = std::uniform_int_distribution<std::size_t>(1, spec.max_features)(rng);
  std::size_t nt = std::uniform_int_distribution<std::size_t>(1, spec.max_trees)(rng);
  std::vector<Feature> features;
  for (std::size_t i = 0; i < nf; ++i) {
    if (spec.numeric && i + 1 == nf) {
      features.push_back({"N" + std::to_string(i), FeatureKind::kNumeric, {}});
    } else {
      features.push_back({"X" + std::to_string(i), FeatureKind::kCategorical, {"0", "1"}});
    }
  }
  std::vector<std::string> classes;
  for (std::size_t c = 0; c < spec.classes; ++c) classes.push_back("c" + std::to_string(c));
  std::vector<Tree> trees;
  for (std::size_t t = 0; t < nt; ++t) {
    std::vector<Tree::Node> nodes(1);
    detail::grow(nodes, 0, 0, features, spec, rng);
    trees.emplace_back(std::move(nodes));
  }
  return Forest(std::move(features), std::move(classes), std::move(trees));
}

inline CnfFormula random_3cnf(std::uint64_t seed, std::uint32_t max_vars = 15,
                              std::size_t max_clauses = 30) {
  std::mt19937_64 rng(seed);
  CnfFormula f;
  f.variables = std::uniform_int_distribution<std::uint32_t>(1, max_vars)(rng);
  std::size_t m = std::uniform_int_distribution<std::size_t>(1, max_clauses)(rng);
  std::uniform_int_distribution<int> var(1, static_cast<int>(f.variables));
  for (std::size_t k = 0; k < m; ++k) {
    std::array<int, 3> clause{};
    for (int& lit : clause) lit = std::bernoulli_distribution(0.5)(rng) ? var(rng) : -var(rng);
    f.clauses.push_back(clause);
  }
  return f;
}

// A concrete input inside a working-space class: categorical cells map to
// their value index, numeric cells to a point strictly inside the interval.
inline Input representative(const DomainPartition& partition, std::span<const std::uint32_t> cells) {
  Input x(partition.feature_count());
  for (std::size_t i = 0; i < x.size(); ++i) {
    const PartitionSet& s = partition.cell(i, cells[i]);
    if (s.kind == FeatureKind::kCategorical) {
      x[i] = static_cast<double>(s.categories.front());
    } else if (std::isinf(s.lower) && std::isinf(s.upper)) {
      x[i] = 0.0;
    } else if (std::isinf(s.lower)) {
      x[i] = s.upper;  // upper bound belongs to the cell
    } else if (std::isinf(s.upper)) {
      x[i] = s.lower + 1.0;
    } else {
      x[i] = (s.lower + s.upper) / 2.0;
    }
  }
  return x;
}

}  // namespace rfx::testing
