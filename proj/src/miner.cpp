#include "rfexplain/miner.hpp"

#include <algorithm>
#include <cmath>
#include <thread>

#include "json.hpp"

#include "rfexplain/error.hpp"

namespace rfx {

namespace {

bool sufficient_query(const QuerySpec& q) {
  return q.target.class_value && q.target.features.empty() && !q.condition.class_value &&
         q.condition.features.size() == 1;
}

bool necessary_query(const QuerySpec& q) {
  return !q.target.class_value && q.target.features.size() == 1 && q.condition.class_value &&
         q.condition.features.empty();
}

// One cell pair of two distinct used features.
struct Candidate {
  FeatureConstraint a;
  FeatureConstraint b;
};

std::vector<Candidate> pair_candidates(const DomainPartition& partition) {
  std::vector<std::uint32_t> used;
  for (std::size_t i = 0; i < partition.feature_count(); ++i) {
    if (partition.cell_count(i) >= 2) used.push_back(static_cast<std::uint32_t>(i));
  }
  std::vector<Candidate> out;
  for (std::size_t x = 0; x < used.size(); ++x) {
    for (std::size_t y = x + 1; y < used.size(); ++y) {
      auto ni = static_cast<std::uint32_t>(partition.cell_count(used[x]));
      auto nj = static_cast<std::uint32_t>(partition.cell_count(used[y]));
      for (std::uint32_t s = 0; s < ni; ++s) {
        for (std::uint32_t t = 0; t < nj; ++t) {
          out.push_back({{used[x], s, s}, {used[y], t, t}});
        }
      }
    }
  }
  return out;
}

std::string format_probability(double p) { return format_number(std::round(p * 1e4) / 1e4); }

}  // namespace

void validate(const MinerConfig& config) {
  if (!(config.delta > 0 && config.delta <= 1)) {
    throw Error(ErrorCode::kInvalidArgument, "delta must lie in (0, 1]");
  }
  if (!(config.lift >= 1) || !std::isfinite(config.lift)) {
    throw Error(ErrorCode::kInvalidArgument, "lift must be at least 1");
  }
  if (config.pair_samples < 1 || config.pair_budget < config.pair_samples) {
    throw Error(ErrorCode::kInvalidArgument,
                "pair budget must be at least the per-pair sample target, which must be positive");
  }
}

std::vector<QuerySpec> stage1_atomic_queries(const DomainPartition& partition) {
  std::vector<QuerySpec> out;
  std::size_t classes = partition.forest().class_count();
  for (std::size_t i = 0; i < partition.feature_count(); ++i) {
    if (partition.cell_count(i) < 2) continue;
    for (std::uint32_t s = 0; s < partition.cell_count(i); ++s) {
      FeatureConstraint c{static_cast<std::uint32_t>(i), s, s};
      for (std::size_t y = 0; y < classes; ++y) {
        auto cls = static_cast<std::uint32_t>(y);
        out.push_back({{cls, {}}, {std::nullopt, {c}}});
        out.push_back({{std::nullopt, {c}}, {cls, {}}});
      }
    }
  }
  return out;
}

bool is_almost_sufficient(const Estimate& estimate, const Estimate& prior,
                          const MinerConfig& config) {
  if (!estimate.value || !prior.value) return false;
  return *estimate.value >= config.delta && *estimate.value > config.lift * *prior.value;
}

bool is_almost_necessary(const Estimate& estimate, const MinerConfig& config) {
  return estimate.value && *estimate.value >= config.delta;
}

std::optional<ReasonReport> merge_necessary(std::span<const ReasonReport> members) {
  if (members.empty()) return std::nullopt;
  if (members.size() == 1) return members[0];
  ReasonReport merged = members[0];
  merged.merged = true;
  for (const ReasonReport& m : members.subspan(1)) {
    for (const FeatureConstraint& c : m.conditions) {
      // Two values of one feature can both be necessary only when delta <= 0.5;
      // the first one wins then.
      bool seen = std::any_of(merged.conditions.begin(), merged.conditions.end(),
                              [&](const FeatureConstraint& d) { return d.feature == c.feature; });
      if (!seen) merged.conditions.push_back(c);
    }
    merged.p = std::min(merged.p, m.p);
    merged.samples = std::min(merged.samples, m.samples);
  }
  std::sort(merged.conditions.begin(), merged.conditions.end(),
            [](const FeatureConstraint& a, const FeatureConstraint& b) { return a.feature < b.feature; });
  return merged;
}

Stage1Mining mine_stage1(const PlausibilityModel& model, const SamplerConfig& sampler,
                         const MinerConfig& config, const ProgressFn& progress) {
  validate(config);
  const DomainPartition& partition = model.partition();
  const std::size_t classes = model.forest().class_count();

  Stage1Mining out;
  out.exact = config.exact;
  out.queries = stage1_atomic_queries(partition);
  std::vector<QuerySpec> all = out.queries;
  for (std::size_t y = 0; y < classes; ++y) {
    all.push_back({{static_cast<std::uint32_t>(y), {}}, {}});
  }

  std::vector<Estimate> estimates;
  if (config.exact) {
    ExactCounts counts = exact_counts(model, all, config.max_exact_classes);
    out.nonambiguous = make_estimate(counts.z, counts.total);
    for (const QueryCount& q : counts.queries) {
      estimates.push_back(make_estimate(q.numerator, q.denominator));
    }
  } else {
    Stage1Result r = run_stage1(model, all, sampler, progress);
    out.nonambiguous = r.nonambiguous;
    out.counters = std::move(r.counters);
    out.stopped_early = r.stopped_early;
    estimates = std::move(r.estimates);
  }
  out.estimates.assign(estimates.begin(), estimates.begin() + static_cast<std::ptrdiff_t>(out.queries.size()));
  out.priors.assign(estimates.begin() + static_cast<std::ptrdiff_t>(out.queries.size()), estimates.end());

  for (std::size_t k = 0; k < out.queries.size(); ++k) {
    const QuerySpec& q = out.queries[k];
    const Estimate& e = out.estimates[k];
    if (sufficient_query(q)) {
      std::size_t y = *q.target.class_value;
      if (is_almost_sufficient(e, out.priors[y], config)) {
        out.sufficient.push_back(
            {ReasonKind::kSufficient, y, q.condition.features, *e.value, e.samples});
      }
    } else if (necessary_query(q)) {
      if (is_almost_necessary(e, config)) {
        out.necessary.push_back({ReasonKind::kNecessary, *q.condition.class_value,
                                 q.target.features, *e.value, e.samples});
      }
    }
  }
  for (std::size_t y = 0; y < classes; ++y) {
    std::vector<ReasonReport> members;
    for (const ReasonReport& r : out.necessary) {
      if (r.cls == y) members.push_back(r);
    }
    if (auto m = merge_necessary(members)) out.merged.push_back(*m);
  }
  return out;
}

bool is_redundant(const ReasonReport& pair, std::span<const ReasonReport> singletons) {
  return std::any_of(singletons.begin(), singletons.end(), [&](const ReasonReport& s) {
    if (s.kind != ReasonKind::kSufficient || s.cls != pair.cls || s.conditions.size() != 1) {
      return false;
    }
    bool member = std::find(pair.conditions.begin(), pair.conditions.end(), s.conditions[0]) !=
                  pair.conditions.end();
    return member && s.p >= pair.p;
  });
}

std::vector<ReasonReport> filter_redundant(std::span<const ReasonReport> reports,
                                           std::span<const ReasonReport> singletons) {
  std::vector<ReasonReport> out;
  for (const ReasonReport& r : reports) {
    if (r.conditions.size() != 2 || !is_redundant(r, singletons)) out.push_back(r);
  }
  return out;
}

Stage2Summary stage2_pairs(const PlausibilityModel& model, const Stage1Mining& stage1,
                           const SamplerConfig& sampler, const MinerConfig& config,
                           const ReportSink& sink) {
  validate(config);
  validate(sampler);
  const DomainPartition& partition = model.partition();
  const std::size_t classes = model.forest().class_count();
  const std::vector<Candidate> candidates = pair_candidates(partition);

  // Conditioned stage-1 samples per (feature, cell).
  std::vector<std::vector<std::uint64_t>> reached(partition.feature_count());
  for (std::size_t i = 0; i < partition.feature_count(); ++i) {
    reached[i].assign(partition.cell_count(i), 0);
  }
  for (std::size_t k = 0; k < stage1.queries.size(); ++k) {
    const QuerySpec& q = stage1.queries[k];
    if (!sufficient_query(q)) continue;
    const FeatureConstraint& c = q.condition.features[0];
    reached[c.feature][c.first] = std::max(reached[c.feature][c.first], stage1.estimates[k].samples);
  }

  Stage2Summary summary;
  summary.candidates = candidates.size();

  struct Outcome {
    bool skipped = false;
    bool starved = false;
    std::vector<std::uint64_t> per_class;
    std::uint64_t accepted = 0;
  };

  auto emit = [&](const Candidate& cand, const Outcome& o) {
    if (o.skipped) {
      ++summary.skipped_unreached;
      return;
    }
    if (o.starved) {
      ++summary.starved;
      return;
    }
    for (std::size_t y = 0; y < classes; ++y) {
      Estimate e = make_estimate(o.per_class[y], o.accepted);
      if (!is_almost_sufficient(e, stage1.priors[y], config)) continue;
      ReasonReport r{ReasonKind::kSufficient, y, {cand.a, cand.b}, *e.value, e.samples};
      if (is_redundant(r, stage1.sufficient)) {
        ++summary.redundant;
        if (!config.keep_redundant) continue;
        r.redundant = true;
      }
      ++summary.reported;
      sink(r);
    }
  };

  auto unreached = [&](const Candidate& c) {
    return reached[c.a.feature][c.a.first] == 0 || reached[c.b.feature][c.b.first] == 0;
  };

  if (config.exact) {
    std::vector<QuerySpec> queries;
    for (const Candidate& c : candidates) {
      for (std::size_t y = 0; y < classes; ++y) {
        queries.push_back({{static_cast<std::uint32_t>(y), {}}, {std::nullopt, {c.a, c.b}}});
      }
    }
    ExactCounts counts = exact_counts(model, queries, config.max_exact_classes);
    for (std::size_t k = 0; k < candidates.size(); ++k) {
      Outcome o;
      o.skipped = unreached(candidates[k]);
      o.accepted = counts.queries[k * classes].denominator;
      o.starved = o.accepted == 0;
      for (std::size_t y = 0; y < classes; ++y) {
        o.per_class.push_back(counts.queries[k * classes + y].numerator);
      }
      emit(candidates[k], o);
    }
    return summary;
  }

  const std::size_t batch = std::size_t{64} * sampler.workers;
  std::vector<Outcome> outcomes;
  for (std::size_t start = 0; start < candidates.size(); start += batch) {
    std::size_t stop = std::min(candidates.size(), start + batch);
    outcomes.assign(stop - start, Outcome{});
    auto work = [&](std::size_t first, std::size_t step) {
      for (std::size_t k = start + first; k < stop; k += step) {
        Outcome& o = outcomes[k - start];
        const Candidate& c = candidates[k];
        if (unreached(c)) {
          o.skipped = true;
          continue;
        }
        ConditionalCounts cc = sample_conditional(
            model, {std::nullopt, {c.a, c.b}}, sampler.seed,
            kStreamPair | static_cast<std::uint32_t>(k), config.pair_samples, config.pair_budget);
        o.accepted = cc.accepted;
        o.per_class = std::move(cc.per_class);
        o.starved = cc.accepted < config.pair_samples;
      }
    };
    if (sampler.workers == 1) {
      work(0, 1);
    } else {
      std::vector<std::jthread> threads;
      for (unsigned w = 0; w < sampler.workers; ++w) threads.emplace_back(work, w, sampler.workers);
    }
    for (std::size_t k = start; k < stop; ++k) emit(candidates[k], outcomes[k - start]);
  }
  return summary;
}

CompletionCheck completion_fraction(const PlausibilityModel& model,
                                    std::span<const FeatureConstraint> conditions, std::size_t cls,
                                    const MinerConfig& config, std::uint64_t seed,
                                    std::uint32_t stream) {
  const DomainPartition& partition = model.partition();
  const std::size_t n = partition.feature_count();
  std::vector<std::uint32_t> first(n, 0), last(n);
  for (std::size_t i = 0; i < n; ++i) last[i] = static_cast<std::uint32_t>(partition.cell_count(i) - 1);
  for (const FeatureConstraint& c : conditions) {
    first[c.feature] = c.first;
    last[c.feature] = c.last;
  }
  std::uint64_t total = 1;
  bool fits = true;
  for (std::size_t i = 0; i < n && fits; ++i) {
    std::uint64_t width = last[i] - first[i] + 1;
    if (total > config.max_exact_classes / width) {
      fits = false;
    } else {
      total *= width;
    }
  }
  fits = fits && total <= config.max_exact_classes;

  CompletionCheck check;
  if (fits) {
    std::vector<std::uint32_t> cells = first;
    std::uint64_t hits = 0;
    for (std::uint64_t k = 0; k < total; ++k) {
      Output out = model.symbolic().classify(cells);
      if (out && *out == cls) ++hits;
      for (std::size_t i = n; i-- > 0;) {
        if (cells[i] < last[i]) {
          ++cells[i];
          break;
        }
        cells[i] = first[i];
      }
    }
    check.p = static_cast<double>(hits) / static_cast<double>(total);
    check.samples = total;
    check.exact = true;
    return check;
  }

  PartialAssignment condition{std::nullopt, {conditions.begin(), conditions.end()}};
  ConditionalCounts cc =
      sample_conditional(model, condition, seed, stream, config.pair_budget, config.pair_budget);
  check.p = static_cast<double>(cc.per_class[cls]) / static_cast<double>(config.pair_budget);
  check.samples = config.pair_budget;
  return check;
}

ReasonReport minimize_sufficient(const PlausibilityModel& model, const ReasonReport& reason,
                                 const MinerConfig& config, std::uint64_t seed) {
  validate(config);
  if (reason.kind != ReasonKind::kSufficient) {
    throw Error(ErrorCode::kInvalidArgument, "only sufficient reasons can be minimized");
  }
  std::vector<FeatureConstraint> kept = reason.conditions;
  std::sort(kept.begin(), kept.end(),
            [](const FeatureConstraint& a, const FeatureConstraint& b) { return a.feature < b.feature; });
  std::uint32_t step = 0;
  auto check = [&](std::span<const FeatureConstraint> set) {
    return completion_fraction(model, set, reason.cls, config, seed, kStreamMinimize | step++);
  };

  CompletionCheck current = check(kept);
  if (current.p < config.delta) {
    ReasonReport out = reason;
    out.p = current.p;
    out.samples = current.samples;
    out.minimal = false;
    return out;
  }
  bool all_exact = current.exact;
  for (std::size_t k = 0; k < kept.size();) {
    std::vector<FeatureConstraint> reduced = kept;
    reduced.erase(reduced.begin() + static_cast<std::ptrdiff_t>(k));
    CompletionCheck c = check(reduced);
    all_exact = all_exact && c.exact;
    if (c.p >= config.delta) {
      kept = std::move(reduced);
      current = c;
    } else {
      ++k;
    }
  }
  ReasonReport out = reason;
  out.conditions = std::move(kept);
  out.p = current.p;
  out.samples = current.samples;
  out.minimal = all_exact;
  out.redundant = false;
  out.merged = false;
  return out;
}

std::string report_text(const DomainPartition& partition, const ReasonReport& report) {
  const std::string& cls = partition.forest().classes()[report.cls];
  std::string conds = describe(partition, PartialAssignment{std::nullopt, report.conditions});
  std::string out = report.kind == ReasonKind::kSufficient ? "P( " + cls + " | " + conds + " )"
                                                           : "P( " + conds + " | " + cls + " )";
  out += "=" + format_probability(report.p) + " (" + std::to_string(report.samples) + " samples)";
  if (report.redundant) out += " [redundant]";
  if (report.minimal) out += " [minimal]";
  if (report.merged) out += " [merged]";
  return out;
}

std::string report_json(const DomainPartition& partition, const ReasonReport& report) {
  const Forest& forest = partition.forest();
  nlohmann::ordered_json j;
  j["kind"] = report.kind == ReasonKind::kSufficient ? "sufficient" : "necessary";
  j["class"] = forest.classes()[report.cls];
  j["conditions"] = nlohmann::ordered_json::array();
  for (const FeatureConstraint& c : report.conditions) {
    j["conditions"].push_back(
        {{"feature", forest.features()[c.feature].name}, {"set", constraint_set(partition, c)}});
  }
  j["p"] = report.p;
  j["samples"] = report.samples;
  j["flags"] = nlohmann::ordered_json::array();
  if (report.redundant) j["flags"].push_back("redundant");
  if (report.minimal) j["flags"].push_back("minimal");
  if (report.merged) j["flags"].push_back("merged");
  return j.dump();
}

}  // namespace rfx
