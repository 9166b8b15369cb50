#include "rfexplain/query.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <set>

#include "rfexplain/error.hpp"

namespace rfx {

namespace {

[[noreturn]] void bad_query(const std::string& what) {
  throw Error(ErrorCode::kInvalidArgument, "bad query: " + what);
}

std::string_view trim(std::string_view s) {
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.front()))) s.remove_prefix(1);
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.back()))) s.remove_suffix(1);
  return s;
}

double parse_bound(std::string_view text) {
  if (text == "inf" || text == "+inf") return std::numeric_limits<double>::infinity();
  if (text == "-inf") return -std::numeric_limits<double>::infinity();
  double v = 0;
  auto [end, ec] = std::from_chars(text.data(), text.data() + text.size(), v);
  if (ec != std::errc() || end != text.data() + text.size()) {
    bad_query("'" + std::string(text) + "' is not a number");
  }
  return v;
}

void parse_item(const DomainPartition& partition, std::string_view item,
                PartialAssignment& side) {
  const Forest& forest = partition.forest();
  std::size_t at = item.find_first_of("<>=");
  if (at == std::string_view::npos) bad_query("missing operator in '" + std::string(item) + "'");
  std::string_view name = trim(item.substr(0, at));
  std::string_view op;
  if (item.substr(at, 2) == "<=") {
    op = "<=";
  } else if (item[at] == '>') {
    op = ">";
  } else if (item[at] == '=') {
    op = "=";
  } else {
    bad_query("unsupported operator in '" + std::string(item) + "'");
  }
  std::string value(trim(item.substr(at + op.size())));
  if (name.empty() || value.empty()) bad_query("incomplete condition '" + std::string(item) + "'");

  bool class_name = name == "class" || (name == "C" && forest.class_index(value).has_value());
  if (class_name) {
    if (op != "=") bad_query("the class variable only supports '='");
    auto cls = forest.class_index(value);
    if (!cls) bad_query("unknown class '" + value + "'");
    if (side.class_value) bad_query("class variable given twice");
    side.class_value = static_cast<std::uint32_t>(*cls);
    return;
  }

  std::size_t i = forest.feature_index(name);
  const Feature& f = forest.features()[i];
  FeatureConstraint c{static_cast<std::uint32_t>(i), 0, 0};
  auto last_cell = static_cast<std::uint32_t>(partition.cell_count(i) - 1);
  if (f.kind == FeatureKind::kCategorical) {
    if (op != "=") bad_query("categorical feature '" + f.name + "' only supports '='");
    auto it = std::find(f.values.begin(), f.values.end(), value);
    if (it == f.values.end()) bad_query("'" + value + "' is not a value of '" + f.name + "'");
    auto v = static_cast<std::uint32_t>(it - f.values.begin());
    c.first = c.last = partition.used(i) ? v : 0;
  } else {
    double v = parse_bound(value);
    const auto& t = partition.thresholds(i);
    if (op == "=") {
      if (std::isnan(v)) bad_query("NaN value");
      auto cell = static_cast<std::uint32_t>(std::lower_bound(t.begin(), t.end(), v) - t.begin());
      c.first = c.last = cell;
    } else {
      // Number of cells entirely at or below v; v must be a cell boundary.
      std::uint32_t below = 0;
      if (std::isinf(v)) {
        below = v > 0 ? last_cell + 1 : 0;
      } else {
        auto it = std::lower_bound(t.begin(), t.end(), v);
        if (it == t.end() || *it != v) {
          bad_query("'" + value + "' is not a partition boundary of '" + f.name + "'");
        }
        below = static_cast<std::uint32_t>(it - t.begin()) + 1;
      }
      if (op == "<=") {
        if (below == 0) bad_query("'" + f.name + "<=" + value + "' selects no cell");
        c.first = 0;
        c.last = below - 1;
      } else {
        if (below > last_cell) bad_query("'" + f.name + ">" + value + "' selects no cell");
        c.first = below;
        c.last = last_cell;
      }
    }
  }
  side.features.push_back(c);
}

PartialAssignment parse_side(const DomainPartition& partition, std::string_view text) {
  PartialAssignment side;
  text = trim(text);
  if (text.empty()) return side;
  std::size_t start = 0;
  while (start <= text.size()) {
    std::size_t comma = text.find(',', start);
    std::string_view item =
        trim(text.substr(start, comma == std::string_view::npos ? text.npos : comma - start));
    if (item.empty()) bad_query("empty condition");
    parse_item(partition, item, side);
    if (comma == std::string_view::npos) break;
    start = comma + 1;
  }
  return side;
}

}  // namespace

void validate_query(const DomainPartition& partition, const QuerySpec& query) {
  if (query.target.class_value && query.condition.class_value) {
    bad_query("class variable on both sides");
  }
  std::set<std::uint32_t> seen;
  for (const PartialAssignment* side : {&query.target, &query.condition}) {
    if (side->class_value && *side->class_value >= partition.forest().class_count()) {
      bad_query("class index out of range");
    }
    for (const FeatureConstraint& c : side->features) {
      if (c.feature >= partition.feature_count()) bad_query("feature index out of range");
      if (c.first > c.last || c.last >= partition.cell_count(c.feature)) {
        bad_query("cell range out of bounds");
      }
      if (!seen.insert(c.feature).second) {
        bad_query("feature '" + partition.forest().features()[c.feature].name +
                  "' appears more than once");
      }
    }
  }
}

QuerySpec parse_query(const DomainPartition& partition, std::string_view text) {
  QuerySpec query;
  std::size_t bar = text.find('|');
  query.target = parse_side(partition, text.substr(0, bar));
  if (bar != std::string_view::npos) {
    if (text.find('|', bar + 1) != std::string_view::npos) bad_query("more than one '|'");
    query.condition = parse_side(partition, text.substr(bar + 1));
  }
  validate_query(partition, query);
  return query;
}

std::string constraint_set(const DomainPartition& partition, const FeatureConstraint& c) {
  const Feature& f = partition.forest().features()[c.feature];
  PartitionSet merged = partition.cell(c.feature, c.first);
  if (c.last != c.first) {
    const PartitionSet& last = partition.cell(c.feature, c.last);
    if (f.kind == FeatureKind::kNumeric) {
      merged.upper = last.upper;
    } else {
      for (std::uint32_t j = c.first + 1; j <= c.last; ++j) {
        const auto& more = partition.cell(c.feature, j).categories;
        merged.categories.insert(merged.categories.end(), more.begin(), more.end());
      }
    }
  }
  return merged.to_string(f);
}

std::string describe(const DomainPartition& partition, const PartialAssignment& side) {
  const Forest& forest = partition.forest();
  std::string out;
  auto append = [&](const std::string& s) {
    if (!out.empty()) out += ", ";
    out += s;
  };
  if (side.class_value) append(forest.classes()[*side.class_value]);
  for (const FeatureConstraint& c : side.features) {
    const Feature& f = forest.features()[c.feature];
    const PartitionSet& cell = partition.cell(c.feature, c.first);
    // Single categorical values print bare, as in "'B'=1".
    std::string set = c.first == c.last && f.kind == FeatureKind::kCategorical &&
                              cell.categories.size() == 1
                          ? f.values[cell.categories[0]]
                          : constraint_set(partition, c);
    append("'" + f.name + "'=" + set);
  }
  return out;
}

std::string describe(const DomainPartition& partition, const QuerySpec& query) {
  std::string out = "P( " + describe(partition, query.target);
  if (!query.condition.empty()) out += " | " + describe(partition, query.condition);
  return out + " )";
}

}  // namespace rfx
