#pragma once

#include <array>
#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

#include "rfexplain/forest.hpp"

namespace rfx {

struct CnfFormula {
  std::uint32_t variables = 0;
  // Signed 1-based variable indices, three per clause.
  std::vector<std::array<int, 3>> clauses;
  // Normalization notes, e.g. padded clauses.
  std::vector<std::string> notes;
};

// DIMACS CNF: "c" comments, a "p cnf n m" header, one clause per line ending
// in 0, optional "%" end marker. Shorter clauses are padded by repeating
// their last literal. Throws kParse.
CnfFormula parse_dimacs(std::string_view text);

// One clause tree per clause followed by one stump labelled "0" per clause.
// Features x1..xn are categorical {"0","1"}; classes are {"0","1"}.
Forest reduce_3cnf_to_forest(const CnfFormula& formula);

// Satisfying assignments by enumeration. Throws kCapExceeded when
// variables > cap_vars.
std::uint64_t count_sat_bruteforce(const CnfFormula& formula, std::uint32_t cap_vars = 22);

}  // namespace rfx
