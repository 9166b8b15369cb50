#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "rfexplain/markov.hpp"
#include "rfexplain/query.hpp"
#include "rfexplain/sampler.hpp"

namespace rfx {

struct MinerConfig {
  double delta = 0.9;  // p >= delta
  double lift = 1.1;   // p > lift * prior, sufficient reasons only
  // Stage 2: accepted conditional samples wanted per candidate, and the
  // attempt budget to get them. Candidates that miss the target are dropped.
  std::uint64_t pair_samples = 100;
  std::uint64_t pair_budget = 2000;
  // Exact probabilities by class enumeration instead of sampling.
  bool exact = false;
  std::uint64_t max_exact_classes = kDefaultMaxExactClasses;
  // Emit dominated pairs flagged "redundant" instead of dropping them.
  bool keep_redundant = false;
};

void validate(const MinerConfig& config);

enum class ReasonKind { kSufficient, kNecessary };

struct ReasonReport {
  ReasonKind kind = ReasonKind::kSufficient;
  std::size_t cls = 0;
  std::vector<FeatureConstraint> conditions;
  double p = 0;
  std::uint64_t samples = 0;
  bool redundant = false;
  bool minimal = false;
  bool merged = false;

  bool operator==(const ReasonReport&) const = default;
};

// For every used feature, cell and class: (C=y | U_i=s) then (U_i=s | C=y).
std::vector<QuerySpec> stage1_atomic_queries(const DomainPartition& partition);

bool is_almost_sufficient(const Estimate& estimate, const Estimate& prior, const MinerConfig& config);
bool is_almost_necessary(const Estimate& estimate, const MinerConfig& config);

// Union of one class's almost-necessary conditions; p is the smallest member
// probability, samples the smallest member count. nullopt without members.
std::optional<ReasonReport> merge_necessary(std::span<const ReasonReport> members);

struct Stage1Mining {
  bool exact = false;
  std::vector<QuerySpec> queries;
  std::vector<Estimate> estimates;  // parallel to queries
  std::vector<Estimate> priors;     // P(C=y) per class
  Estimate nonambiguous;
  Counters counters;                // sampled mode only
  bool stopped_early = false;
  std::vector<ReasonReport> sufficient;
  std::vector<ReasonReport> necessary;
  std::vector<ReasonReport> merged;  // one per class with members
};

Stage1Mining mine_stage1(const PlausibilityModel& model, const SamplerConfig& sampler,
                         const MinerConfig& config, const ProgressFn& progress = {});

// Whether a size-2 report is dominated by a singleton sufficient report of the
// same class with at least its probability.
bool is_redundant(const ReasonReport& pair, std::span<const ReasonReport> singletons);
std::vector<ReasonReport> filter_redundant(std::span<const ReasonReport> reports,
                                           std::span<const ReasonReport> singletons);

struct Stage2Summary {
  std::uint64_t candidates = 0;
  std::uint64_t skipped_unreached = 0;  // a value never seen in stage 1
  std::uint64_t starved = 0;            // sample target missed within the budget
  std::uint64_t reported = 0;
  std::uint64_t redundant = 0;
};

using ReportSink = std::function<void(const ReasonReport&)>;

// Size-2 sufficient candidates over every pair of used features and cell
// pairs, streamed to `sink` in candidate order.
Stage2Summary stage2_pairs(const PlausibilityModel& model, const Stage1Mining& stage1,
                           const SamplerConfig& sampler, const MinerConfig& config,
                           const ReportSink& sink);

// Fraction of the uniform completions of `conditions` classified `cls`
// (ambiguous completions count against). Exact under the class cap,
// otherwise estimated from pair_budget conditional draws.
struct CompletionCheck {
  double p = 0;
  std::uint64_t samples = 0;
  bool exact = false;
};
CompletionCheck completion_fraction(const PlausibilityModel& model,
                                    std::span<const FeatureConstraint> conditions, std::size_t cls,
                                    const MinerConfig& config, std::uint64_t seed,
                                    std::uint32_t stream);

// Greedy deletion in ascending feature order, keeping the set at least
// delta-sufficient by completion_fraction. `minimal` is set only when every
// check was exact. p and samples come from the last passing check; a reason
// that fails up front keeps its conditions and carries the failing p.
ReasonReport minimize_sufficient(const PlausibilityModel& model, const ReasonReport& reason,
                                 const MinerConfig& config, std::uint64_t seed);

// "P( Pos | 'B'=1 )=0.99 (4982 samples)".
std::string report_text(const DomainPartition& partition, const ReasonReport& report);
// {"kind","class","conditions":[{"feature","set"}],"p","samples","flags"}.
std::string report_json(const DomainPartition& partition, const ReasonReport& report);

}  // namespace rfx
