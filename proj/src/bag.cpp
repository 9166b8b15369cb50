#include "rfexplain/bag.hpp"

#include <algorithm>

#include "rfexplain/error.hpp"

namespace rfx {

Bag::Bag(std::vector<Argument> arguments, std::vector<Edge> attacks, std::vector<Edge> supports)
    : arguments_(std::move(arguments)),
      attacks_(std::move(attacks)),
      supports_(std::move(supports)),
      attackers_(arguments_.size()),
      supporters_(arguments_.size()) {
  std::sort(attacks_.begin(), attacks_.end());
  attacks_.erase(std::unique(attacks_.begin(), attacks_.end()), attacks_.end());
  std::sort(supports_.begin(), supports_.end());
  supports_.erase(std::unique(supports_.begin(), supports_.end()), supports_.end());
  for (const auto& [from, to] : attacks_) {
    if (from >= arguments_.size() || to >= arguments_.size()) {
      throw Error(ErrorCode::kInvalidArgument, "attack references an unknown argument");
    }
    attackers_[to].push_back(from);
  }
  for (const auto& [from, to] : supports_) {
    if (from >= arguments_.size() || to >= arguments_.size()) {
      throw Error(ErrorCode::kInvalidArgument, "support references an unknown argument");
    }
    supporters_[to].push_back(from);
  }
}

Bag Bag::explanation(const Forest& forest, const DomainPartition& partition) {
  std::vector<Argument> args;
  std::vector<std::size_t> rule_offset;
  std::vector<std::size_t> feature_offset;

  for (std::size_t c = 0; c < forest.class_count(); ++c) {
    args.push_back({ArgumentKind::kClass, static_cast<std::uint32_t>(c), 0});
  }
  for (std::size_t t = 0; t < forest.tree_count(); ++t) {
    rule_offset.push_back(args.size());
    for (std::size_t r = 0; r < forest.trees()[t].leaf_count(); ++r) {
      args.push_back({ArgumentKind::kRule, static_cast<std::uint32_t>(t),
                      static_cast<std::uint32_t>(r)});
    }
  }
  for (std::size_t i = 0; i < forest.feature_count(); ++i) {
    feature_offset.push_back(args.size());
    for (std::size_t j = 0; j < partition.cell_count(i); ++j) {
      args.push_back({ArgumentKind::kFeature, static_cast<std::uint32_t>(i),
                      static_cast<std::uint32_t>(j)});
    }
  }

  std::vector<Edge> attacks;
  std::vector<Edge> supports;
  // Feature-feature: every ordered pair of distinct cells of one feature.
  for (std::size_t i = 0; i < forest.feature_count(); ++i) {
    std::size_t n = partition.cell_count(i);
    for (std::size_t a = 0; a < n; ++a) {
      for (std::size_t b = 0; b < n; ++b) {
        if (a == b) continue;
        attacks.emplace_back(static_cast<ArgumentId>(feature_offset[i] + a),
                             static_cast<ArgumentId>(feature_offset[i] + b));
      }
    }
  }
  for (std::size_t t = 0; t < forest.tree_count(); ++t) {
    const auto& rules = forest.trees()[t].rules();
    for (std::size_t r = 0; r < rules.size(); ++r) {
      auto rule_id = static_cast<ArgumentId>(rule_offset[t] + r);
      // Feature-rule: a cell inconsistent with some premise literal.
      for (std::size_t i = 0; i < forest.feature_count(); ++i) {
        for (std::size_t j = 0; j < partition.cell_count(i); ++j) {
          bool inconsistent = std::any_of(
              rules[r].premise.begin(), rules[r].premise.end(), [&](const FeatureLiteral& l) {
                return l.condition.feature == i &&
                       partition.satisfies(l.condition, static_cast<std::uint32_t>(j)) !=
                           l.positive;
              });
          if (inconsistent) {
            attacks.emplace_back(static_cast<ArgumentId>(feature_offset[i] + j), rule_id);
          }
        }
      }
      // Rule-class: support the conclusion, attack every other class.
      for (std::size_t c = 0; c < forest.class_count(); ++c) {
        Edge e{rule_id, static_cast<ArgumentId>(c)};
        (c == rules[r].conclusion ? supports : attacks).push_back(e);
      }
    }
  }

  Bag bag(std::move(args), std::move(attacks), std::move(supports));
  bag.class_count_ = forest.class_count();
  bag.rule_offset_ = std::move(rule_offset);
  bag.feature_offset_ = std::move(feature_offset);
  return bag;
}

ArgumentId Bag::class_argument(std::size_t c) const { return static_cast<ArgumentId>(c); }

ArgumentId Bag::rule_argument(std::size_t tree, std::size_t rule) const {
  return static_cast<ArgumentId>(rule_offset_[tree] + rule);
}

ArgumentId Bag::feature_argument(std::size_t feature, std::size_t cell) const {
  return static_cast<ArgumentId>(feature_offset_[feature] + cell);
}

// ---------------------------------------------------------------------------
// Semantics

namespace {

std::size_t count_with(const std::vector<ArgumentId>& args, const Labelling& labelling,
                       bool want_in) {
  return static_cast<std::size_t>(
      std::count_if(args.begin(), args.end(), [&](ArgumentId b) {
        return want_in ? labelling[b] == Label::kIn : labelling[b] != Label::kOut;
      }));
}

}  // namespace

bool attackers_dominate(const Bag& bag, const Labelling& labelling, ArgumentId arg) {
  return count_with(bag.attackers(arg), labelling, true) >
         count_with(bag.supporters(arg), labelling, false);
}

bool supporters_dominate(const Bag& bag, const Labelling& labelling, ArgumentId arg) {
  return count_with(bag.supporters(arg), labelling, true) >
         count_with(bag.attackers(arg), labelling, false);
}

bool is_bicomplete(const Bag& bag, const Labelling& labelling) {
  if (labelling.size() != bag.size()) return false;
  for (ArgumentId a = 0; a < bag.size(); ++a) {
    const auto& att = bag.attackers(a);
    bool attackers_out = std::all_of(att.begin(), att.end(),
                                     [&](ArgumentId b) { return labelling[b] == Label::kOut; });
    bool should_be_in = attackers_out || supporters_dominate(bag, labelling, a);
    bool should_be_out = attackers_dominate(bag, labelling, a);
    if ((labelling[a] == Label::kIn) != should_be_in) return false;
    if ((labelling[a] == Label::kOut) != should_be_out) return false;
  }
  return true;
}

bool is_bistable(const Bag& bag, const Labelling& labelling) {
  return std::none_of(labelling.begin(), labelling.end(),
                      [](Label l) { return l == Label::kUndecided; }) &&
         is_bicomplete(bag, labelling);
}

Labelling labelling_from_class(const Bag& bag, const SymbolicForest& forest,
                               std::span<const std::uint32_t> cells) {
  Labelling labelling(bag.size(), Label::kOut);
  std::vector<std::uint32_t> active(forest.forest().tree_count());
  forest.active_rules(cells, active);
  for (ArgumentId a = 0; a < bag.size(); ++a) {
    const Argument& arg = bag.argument(a);
    if (arg.kind == ArgumentKind::kFeature) {
      if (cells[arg.first] == arg.second) labelling[a] = Label::kIn;
    } else if (arg.kind == ArgumentKind::kRule) {
      if (active[arg.first] == arg.second) labelling[a] = Label::kIn;
    }
  }
  // Class arguments only have rule arguments as attackers and supporters.
  for (ArgumentId a = 0; a < bag.size(); ++a) {
    if (bag.argument(a).kind != ArgumentKind::kClass) continue;
    if (supporters_dominate(bag, labelling, a)) {
      labelling[a] = Label::kIn;
    } else if (attackers_dominate(bag, labelling, a)) {
      labelling[a] = Label::kOut;
    } else {
      labelling[a] = Label::kUndecided;
    }
  }
  return labelling;
}

Labelling labelling_from_input(const Bag& bag, const SymbolicForest& forest, const Input& input) {
  const DomainPartition& partition = forest.partition();
  EquivalenceClass eq = partition.collapse(partition.characteristic(input));
  return labelling_from_class(bag, forest, eq.cells);
}

std::string describe_argument(const Bag& bag, const Forest& forest,
                              const DomainPartition& partition, ArgumentId id) {
  const Argument& arg = bag.argument(id);
  switch (arg.kind) {
    case ArgumentKind::kClass:
      return forest.classes()[arg.first];
    case ArgumentKind::kRule:
      return "T" + std::to_string(arg.first) + " " +
             forest.describe(forest.trees()[arg.first].rules()[arg.second]);
    case ArgumentKind::kFeature:
      return forest.features()[arg.first].name + " in " +
             partition.describe_cell(arg.first, arg.second);
  }
  return {};
}

std::string export_bag(const Bag& bag, const Forest& forest, const DomainPartition& partition) {
  static constexpr const char* kKinds[] = {"class", "rule", "feature"};
  std::string out;
  for (ArgumentId a = 0; a < bag.size(); ++a) {
    out += "arg " + std::to_string(a) + " " +
           kKinds[static_cast<std::size_t>(bag.argument(a).kind)] + " " +
           describe_argument(bag, forest, partition, a) + "\n";
  }
  for (const auto& [from, to] : bag.attacks()) {
    out += "att " + std::to_string(from) + " " + std::to_string(to) + "\n";
  }
  for (const auto& [from, to] : bag.supports()) {
    out += "sup " + std::to_string(from) + " " + std::to_string(to) + "\n";
  }
  return out;
}

// ---------------------------------------------------------------------------
// Exact reasoning

LxStatus lx_status(const SymbolicForest& forest, std::span<const std::uint32_t> cells) {
  const Forest& f = forest.forest();
  std::vector<std::uint32_t> rules(f.tree_count());
  forest.active_rules(cells, rules);
  std::vector<std::uint32_t> votes(f.class_count(), 0);
  for (std::size_t t = 0; t < rules.size(); ++t) ++votes[f.trees()[t].rules()[rules[t]].conclusion];
  // Supporters of A_y in L_x are the active rules voting y, its non-out
  // attackers the active rules voting anything else: A_y is in when votes[y]
  // exceeds the rest, out when the rest exceeds it, undecided on equality.
  const std::size_t total = rules.size();
  LxStatus status{true, std::nullopt};
  for (std::size_t y = 0; y < votes.size(); ++y) {
    if (2 * std::size_t{votes[y]} > total) status.accepted = y;
    if (2 * std::size_t{votes[y]} == total) status.bistable = false;
  }
  return status;
}

ExactReasoner::ExactReasoner(const Forest& forest, const DomainPartition& partition,
                             const Bag& bag, std::uint64_t cap)
    : partition_(&partition), bag_(&bag), symbolic_(forest, partition), cap_(cap) {}

std::uint64_t ExactReasoner::enumerate_bistable(
    const std::function<void(std::span<const std::uint32_t>, Output)>& visit) const {
  std::uint64_t count = 0;
  for_each_class(*partition_, cap_, [&](std::span<const std::uint32_t> cells) {
    LxStatus lx = lx_status(symbolic_, cells);
    if (lx.bistable) {
      ++count;
      visit(cells, lx.accepted);
    }
  });
  return count;
}

std::uint64_t ExactReasoner::bistable_count() const {
  return enumerate_bistable([](std::span<const std::uint32_t>, Output) {});
}

std::vector<std::pair<std::uint32_t, std::uint32_t>> ExactReasoner::feature_cells(
    std::span<const ArgumentId> args) const {
  std::vector<std::pair<std::uint32_t, std::uint32_t>> out;
  for (ArgumentId id : args) {
    if (id >= bag_->size() || bag_->argument(id).kind != ArgumentKind::kFeature) {
      throw Error(ErrorCode::kInvalidArgument,
                  "reasons must consist of feature arguments only");
    }
    out.emplace_back(bag_->argument(id).first, bag_->argument(id).second);
  }
  return out;
}

namespace {

bool accepts_all(std::span<const std::uint32_t> cells,
                 const std::vector<std::pair<std::uint32_t, std::uint32_t>>& wanted) {
  return std::all_of(wanted.begin(), wanted.end(),
                     [&](const auto& fc) { return cells[fc.first] == fc.second; });
}

}  // namespace

ReasonCheck ExactReasoner::is_sufficient(std::span<const ArgumentId> feature_args,
                                         std::size_t cls) const {
  auto wanted = feature_cells(feature_args);
  ReasonCheck check{true, false, 0};
  enumerate_bistable([&](std::span<const std::uint32_t> cells, Output accepted) {
    if (!accepts_all(cells, wanted)) return;
    ++check.support;
    if (accepted != cls) check.holds = false;
  });
  check.vacuous = check.support == 0;
  return check;
}

ReasonCheck ExactReasoner::is_necessary(std::span<const ArgumentId> feature_args,
                                        std::size_t cls) const {
  auto wanted = feature_cells(feature_args);
  ReasonCheck check{true, false, 0};
  enumerate_bistable([&](std::span<const std::uint32_t> cells, Output accepted) {
    if (accepted != cls) return;
    ++check.support;
    if (!accepts_all(cells, wanted)) check.holds = false;
  });
  check.vacuous = check.support == 0;
  return check;
}

NecessaryFeatures ExactReasoner::maximal_necessary_features(std::size_t cls) const {
  // All atomic necessity checks at once: a feature argument is necessary iff
  // every labelling accepting the class has its cell in.
  const DomainPartition& partition = *partition_;
  std::vector<std::vector<bool>> always(partition.feature_count());
  for (std::size_t i = 0; i < partition.feature_count(); ++i) {
    always[i].assign(partition.cell_count(i), true);
  }
  std::uint64_t accepting = 0;
  enumerate_bistable([&](std::span<const std::uint32_t> cells, Output accepted) {
    if (accepted != cls) return;
    ++accepting;
    for (std::size_t i = 0; i < cells.size(); ++i) {
      for (std::size_t j = 0; j < always[i].size(); ++j) {
        if (cells[i] != j) always[i][j] = false;
      }
    }
  });
  NecessaryFeatures result;
  result.vacuous = accepting == 0;
  for (std::size_t i = 0; i < always.size(); ++i) {
    // A single-cell feature is accepted by every labelling; it says nothing.
    if (always[i].size() < 2) continue;
    for (std::size_t j = 0; j < always[i].size(); ++j) {
      if (always[i][j]) result.arguments.push_back(bag_->feature_argument(i, j));
    }
  }
  return result;
}

}  // namespace rfx
