#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <vector>

#include "rfexplain/markov.hpp"
#include "rfexplain/query.hpp"
#include "rfexplain/rng.hpp"

namespace rfx {

enum class SamplingMode { kRejection, kConditional };

struct SamplerConfig {
  std::uint64_t seed = 0;
  std::uint64_t max_iterations = 100000;
  std::uint64_t min_samples = 100;  // conditioned samples per query before early stop
  unsigned workers = 1;
  bool early_stop = true;
  SamplingMode mode = SamplingMode::kRejection;
  // Accuracy target of the early-stop rule: the non-ambiguity estimate needs
  // chernoff_sample_size(0.5, epsilon, fail_prob) samples.
  double epsilon = 0.1;
  double fail_prob = 0.05;
  // Conditional top-up budget per query, in multiples of min_samples.
  std::uint64_t top_up_factor = 20;
};

// Throws kInvalidArgument on out-of-range fields.
void validate(const SamplerConfig& config);

// ceil(3 ln(2/delta) / (p_lower epsilon^2)).
std::uint64_t chernoff_sample_size(double p_lower, double epsilon, double delta);

struct ChernoffBound {
  double epsilon = 0;
  double delta = 0;
};

struct Estimate {
  std::optional<double> value;  // absent when samples == 0
  std::uint64_t samples = 0;
  // Set when the sample count meets the plan for p_lower = 0.5 and the
  // estimate itself is at least 0.5; otherwise the estimate is unplanned.
  std::optional<ChernoffBound> bound;
};

Estimate make_estimate(std::uint64_t positive, std::uint64_t samples,
                       std::optional<ChernoffBound> plan = std::nullopt);

struct QueryCounters {
  std::uint64_t pos = 0;  // rejection samples matching condition and target
  std::uint64_t neg = 0;  // matching the condition only
  // Conditional forward samples (conditional mode top-up).
  std::uint64_t cond_pos = 0;
  std::uint64_t cond_neg = 0;
  std::uint64_t cond_rejected = 0;

  std::uint64_t samples() const { return pos + neg + cond_pos + cond_neg; }
};

struct Counters {
  std::uint64_t ambiguous = 0;
  std::uint64_t nonambiguous = 0;
  std::uint64_t evaluations = 0;  // forest evaluations
  std::vector<QueryCounters> queries;

  std::uint64_t iterations() const { return ambiguous + nonambiguous; }
  Counters& operator+=(const Counters& other);
};

// Non-ambiguous fraction N_n / (N_n + N_a).
Estimate ambiguity_estimate(const Counters& counters,
                            std::optional<ChernoffBound> plan = std::nullopt);

struct Stage1Result {
  Counters counters;
  Estimate nonambiguous;
  std::vector<Estimate> estimates;
  bool stopped_early = false;
};

using ProgressFn = std::function<void(const Counters&)>;

// Uniform draw over working-space equivalence classes.
void sample_equivalence_class(const DomainPartition& partition, CounterRng& rng,
                              std::span<std::uint32_t> cells);

// Fixes the condition's features (uniform within a constrained cell range),
// draws the rest uniformly and completes the assignment. Returns false when
// the completion is ambiguous. The condition must not mention the class.
bool conditional_forward_sample(const PlausibilityModel& model, const PartialAssignment& condition,
                                CounterRng& rng, Assignment& out);

// Rejection-sampling loop over uniformly drawn equivalence classes. Runs in
// rounds of fixed size; every iteration has its own random stream, so the
// counters depend on (seed, config) but not on the worker count.
Stage1Result run_stage1(const PlausibilityModel& model, std::span<const QuerySpec> queries,
                        const SamplerConfig& config, const ProgressFn& progress = {});

// Estimates one feature-only condition by conditional forward sampling:
// stops after `accepted` accepted samples or `budget` attempts.
struct ConditionalCounts {
  std::vector<std::uint64_t> per_class;
  std::uint64_t accepted = 0;
  std::uint64_t rejected = 0;
};
ConditionalCounts sample_conditional(const PlausibilityModel& model,
                                     const PartialAssignment& condition, std::uint64_t seed,
                                     std::uint32_t stream, std::uint64_t accepted,
                                     std::uint64_t budget);

}  // namespace rfx
