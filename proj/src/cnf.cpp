#include "rfexplain/cnf.hpp"

#include <cerrno>
#include <cstdlib>
#include <sstream>

#include "rfexplain/error.hpp"

namespace rfx {

namespace {

Tree::Node leaf(std::size_t label) {
  Tree::Node n;
  n.label = label;
  return n;
}

[[noreturn]] void bad_cnf(std::size_t line, const std::string& what) {
  throw Error(ErrorCode::kParse, "DIMACS line " + std::to_string(line) + ": " + what);
}

bool parse_int(const std::string& token, long long& out) {
  char* end = nullptr;
  errno = 0;
  out = std::strtoll(token.c_str(), &end, 10);
  return !token.empty() && end == token.c_str() + token.size() && errno == 0;
}

}  // namespace

CnfFormula parse_dimacs(std::string_view text) {
  CnfFormula formula;
  bool header = false;
  long long declared = 0;
  std::istringstream in{std::string(text)};
  std::string line;
  std::size_t number = 0;
  while (std::getline(in, line)) {
    ++number;
    std::istringstream tokens(line);
    std::string first;
    if (!(tokens >> first) || first == "c") continue;
    if (first == "%") break;
    if (first == "p") {
      std::string format;
      std::string n, m;
      long long nv = 0;
      if (header) bad_cnf(number, "second header");
      if (!(tokens >> format >> n >> m) || format != "cnf" || !parse_int(n, nv) ||
          !parse_int(m, declared) || nv < 0 || declared < 0 || nv > (1 << 20)) {
        bad_cnf(number, "malformed header, expected 'p cnf <variables> <clauses>'");
      }
      std::string extra;
      if (tokens >> extra) bad_cnf(number, "trailing tokens in header");
      formula.variables = static_cast<std::uint32_t>(nv);
      header = true;
      continue;
    }
    if (!header) bad_cnf(number, "clause before the 'p cnf' header");
    std::vector<int> literals;
    bool terminated = false;
    for (std::string token = first;; ) {
      long long lit = 0;
      if (terminated) bad_cnf(number, "literals after the terminating 0");
      if (!parse_int(token, lit)) bad_cnf(number, "'" + token + "' is not a literal");
      if (lit == 0) {
        terminated = true;
      } else {
        if (std::llabs(lit) > formula.variables) {
          bad_cnf(number, "literal " + token + " out of range");
        }
        literals.push_back(static_cast<int>(lit));
      }
      if (!(tokens >> token)) break;
    }
    if (!terminated) bad_cnf(number, "clause missing its terminating 0");
    if (literals.empty()) bad_cnf(number, "empty clause");
    if (literals.size() > 3) bad_cnf(number, "clause has more than 3 literals");
    std::size_t given = literals.size();
    while (literals.size() < 3) literals.push_back(literals.back());
    if (given < 3) {
      formula.notes.push_back("clause " + std::to_string(formula.clauses.size() + 1) +
                              " padded from " + std::to_string(given) + " to 3 literals");
    }
    formula.clauses.push_back({literals[0], literals[1], literals[2]});
  }
  if (!header) throw Error(ErrorCode::kParse, "DIMACS input has no 'p cnf' header");
  if (static_cast<long long>(formula.clauses.size()) != declared) {
    throw Error(ErrorCode::kParse, "header declares " + std::to_string(declared) +
                                       " clauses but " + std::to_string(formula.clauses.size()) +
                                       " were given");
  }
  return formula;
}

Forest reduce_3cnf_to_forest(const CnfFormula& formula) {
  std::vector<Feature> features;
  for (std::uint32_t v = 1; v <= formula.variables; ++v) {
    features.push_back({"x" + std::to_string(v), FeatureKind::kCategorical, {"0", "1"}});
  }
  std::vector<Tree> trees;
  for (const auto& clause : formula.clauses) {
    // Node 3k tests literal k, 3k+1 is its satisfied leaf; the unsatisfied
    // branch of the last test goes to leaf 0.
    std::vector<Tree::Node> nodes;
    for (int k = 0; k < 3; ++k) {
      int lit = clause[static_cast<std::size_t>(k)];
      Tree::Node test;
      test.leaf = false;
      test.test.feature = static_cast<std::size_t>(std::abs(lit) - 1);
      test.test.op = TestOp::kEquals;
      test.test.category = 1;
      auto satisfied = static_cast<std::int32_t>(nodes.size() + 1);
      auto next = static_cast<std::int32_t>(nodes.size() + 2);
      test.on_true = lit > 0 ? satisfied : next;
      test.on_false = lit > 0 ? next : satisfied;
      nodes.push_back(test);
      nodes.push_back(leaf(1));
    }
    nodes.push_back(leaf(0));
    trees.emplace_back(std::move(nodes));
  }
  for (std::size_t k = 0; k < formula.clauses.size(); ++k) {
    trees.emplace_back(std::vector<Tree::Node>{leaf(0)});
  }
  return Forest(std::move(features), {"0", "1"}, std::move(trees));
}

std::uint64_t count_sat_bruteforce(const CnfFormula& formula, std::uint32_t cap_vars) {
  if (formula.variables > cap_vars || formula.variables >= 64) {
    throw Error(ErrorCode::kCapExceeded, std::to_string(formula.variables) +
                                             " variables exceed the brute-force cap of " +
                                             std::to_string(cap_vars));
  }
  // Clause as (positive mask, negative mask).
  std::vector<std::pair<std::uint64_t, std::uint64_t>> masks;
  for (const auto& clause : formula.clauses) {
    std::uint64_t pos = 0, neg = 0;
    for (int lit : clause) {
      std::uint64_t bit = std::uint64_t{1} << (std::abs(lit) - 1);
      (lit > 0 ? pos : neg) |= bit;
    }
    masks.emplace_back(pos, neg);
  }
  std::uint64_t count = 0;
  const std::uint64_t end = std::uint64_t{1} << formula.variables;
  for (std::uint64_t a = 0; a < end; ++a) {
    bool sat = true;
    for (const auto& [pos, neg] : masks) {
      if ((a & pos) == 0 && (~a & neg) == 0) {
        sat = false;
        break;
      }
    }
    if (sat) ++count;
  }
  return count;
}

}  // namespace rfx
