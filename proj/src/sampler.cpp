#include "rfexplain/sampler.hpp"

#include <algorithm>
#include <cmath>
#include <thread>

#include "rfexplain/error.hpp"

namespace rfx {

namespace {

constexpr std::uint64_t kRoundSize = 1024;

struct Worker {
  std::vector<std::uint32_t> cells;
  Assignment u;
  Counters counters;
};

void run_chunk(const PlausibilityModel& model, std::span<const QuerySpec> queries,
               std::uint64_t seed, std::uint64_t begin, std::uint64_t end, Worker& w) {
  const DomainPartition& partition = model.partition();
  w.cells.resize(partition.feature_count());
  for (std::uint64_t i = begin; i < end; ++i) {
    CounterRng rng(seed, kStreamStage1, i);
    sample_equivalence_class(partition, rng, w.cells);
    ++w.counters.evaluations;
    Output out = model.complete(w.cells, w.u);
    if (!out) {
      ++w.counters.ambiguous;
      continue;
    }
    ++w.counters.nonambiguous;
    for (std::size_t q = 0; q < queries.size(); ++q) {
      if (!queries[q].condition.matches(w.cells, *out)) continue;
      if (queries[q].target.matches(w.cells, *out)) {
        ++w.counters.queries[q].pos;
      } else {
        ++w.counters.queries[q].neg;
      }
    }
  }
}

bool enough(const Counters& c, const SamplerConfig& config, std::uint64_t planned) {
  if (c.iterations() < planned) return false;
  return std::all_of(c.queries.begin(), c.queries.end(), [&](const QueryCounters& q) {
    return q.samples() >= config.min_samples;
  });
}

}  // namespace

void validate(const SamplerConfig& config) {
  if (config.max_iterations < 1) {
    throw Error(ErrorCode::kInvalidArgument, "empty budget: max_iterations must be at least 1");
  }
  if (config.workers < 1) throw Error(ErrorCode::kInvalidArgument, "workers must be at least 1");
  if (!(config.epsilon > 0) || !(config.fail_prob > 0 && config.fail_prob < 1)) {
    throw Error(ErrorCode::kInvalidArgument, "epsilon must be > 0 and fail_prob in (0, 1)");
  }
}

std::uint64_t chernoff_sample_size(double p_lower, double epsilon, double delta) {
  if (!(p_lower > 0 && p_lower <= 1)) {
    throw Error(ErrorCode::kInvalidArgument, "p_lower must lie in (0, 1]");
  }
  if (!(epsilon > 0) || !std::isfinite(epsilon)) {
    throw Error(ErrorCode::kInvalidArgument, "epsilon must be positive");
  }
  if (!(delta > 0 && delta < 1)) {
    throw Error(ErrorCode::kInvalidArgument, "delta must lie in (0, 1)");
  }
  double m = 3.0 * std::log(2.0 / delta) / (p_lower * epsilon * epsilon);
  return static_cast<std::uint64_t>(std::ceil(m));
}

Estimate make_estimate(std::uint64_t positive, std::uint64_t samples,
                       std::optional<ChernoffBound> plan) {
  Estimate e;
  e.samples = samples;
  if (samples == 0) return e;
  e.value = static_cast<double>(positive) / static_cast<double>(samples);
  // The plan assumes p >= 0.5; an estimate below that floor is not covered.
  if (plan && *e.value >= 0.5 && samples >= chernoff_sample_size(0.5, plan->epsilon, plan->delta)) {
    e.bound = plan;
  }
  return e;
}

Counters& Counters::operator+=(const Counters& other) {
  ambiguous += other.ambiguous;
  nonambiguous += other.nonambiguous;
  evaluations += other.evaluations;
  if (queries.size() < other.queries.size()) queries.resize(other.queries.size());
  for (std::size_t q = 0; q < other.queries.size(); ++q) {
    queries[q].pos += other.queries[q].pos;
    queries[q].neg += other.queries[q].neg;
    queries[q].cond_pos += other.queries[q].cond_pos;
    queries[q].cond_neg += other.queries[q].cond_neg;
    queries[q].cond_rejected += other.queries[q].cond_rejected;
  }
  return *this;
}

Estimate ambiguity_estimate(const Counters& counters, std::optional<ChernoffBound> plan) {
  return make_estimate(counters.nonambiguous, counters.iterations(), plan);
}

void sample_equivalence_class(const DomainPartition& partition, CounterRng& rng,
                              std::span<std::uint32_t> cells) {
  for (std::size_t i = 0; i < cells.size(); ++i) {
    auto n = static_cast<std::uint32_t>(partition.cell_count(i));
    cells[i] = n == 1 ? 0 : rng.uniform(n);
  }
}

bool conditional_forward_sample(const PlausibilityModel& model, const PartialAssignment& condition,
                                CounterRng& rng, Assignment& out) {
  if (condition.class_value) {
    throw Error(ErrorCode::kInvalidArgument,
                "conditional forward sampling needs a feature-only condition");
  }
  const DomainPartition& partition = model.partition();
  std::vector<std::uint32_t> cells(partition.feature_count());
  sample_equivalence_class(partition, rng, cells);
  for (const FeatureConstraint& c : condition.features) {
    cells[c.feature] = c.first == c.last ? c.first : c.first + rng.uniform(c.last - c.first + 1);
  }
  return model.complete(cells, out).has_value();
}

ConditionalCounts sample_conditional(const PlausibilityModel& model,
                                     const PartialAssignment& condition, std::uint64_t seed,
                                     std::uint32_t stream, std::uint64_t accepted,
                                     std::uint64_t budget) {
  ConditionalCounts counts;
  counts.per_class.assign(model.forest().class_count(), 0);
  Assignment u;
  for (std::uint64_t i = 0; i < budget && counts.accepted < accepted; ++i) {
    CounterRng rng(seed, stream, i);
    if (conditional_forward_sample(model, condition, rng, u)) {
      ++counts.accepted;
      ++counts.per_class[u.cls];
    } else {
      ++counts.rejected;
    }
  }
  return counts;
}

Stage1Result run_stage1(const PlausibilityModel& model, std::span<const QuerySpec> queries,
                        const SamplerConfig& config, const ProgressFn& progress) {
  validate(config);
  for (const QuerySpec& q : queries) validate_query(model.partition(), q);
  const ChernoffBound plan{config.epsilon, config.fail_prob};
  const std::uint64_t planned = chernoff_sample_size(0.5, config.epsilon, config.fail_prob);

  Stage1Result result;
  result.counters.queries.resize(queries.size());
  std::vector<Worker> workers(config.workers);

  std::uint64_t done = 0;
  while (done < config.max_iterations) {
    std::uint64_t round = std::min(kRoundSize, config.max_iterations - done);
    std::uint64_t chunk = (round + config.workers - 1) / config.workers;
    for (Worker& w : workers) w.counters = Counters{.queries = std::vector<QueryCounters>(queries.size())};
    if (config.workers == 1) {
      run_chunk(model, queries, config.seed, done, done + round, workers[0]);
    } else {
      std::vector<std::jthread> threads;
      for (unsigned k = 0; k < config.workers; ++k) {
        std::uint64_t begin = done + std::min(round, chunk * k);
        std::uint64_t end = done + std::min(round, chunk * (k + 1));
        if (begin == end) continue;
        threads.emplace_back([&, begin, end, k] {
          run_chunk(model, queries, config.seed, begin, end, workers[k]);
        });
      }
    }
    for (const Worker& w : workers) result.counters += w.counters;
    done += round;
    if (progress) progress(result.counters);
    if (config.early_stop && done < config.max_iterations && enough(result.counters, config, planned)) {
      result.stopped_early = true;
      break;
    }
  }

  if (config.mode == SamplingMode::kConditional) {
    // Top up sufficient queries the rejection loop starved.
    for (std::size_t q = 0; q < queries.size(); ++q) {
      const QuerySpec& spec = queries[q];
      QueryCounters& qc = result.counters.queries[q];
      if (!spec.target.class_value || !spec.target.features.empty()) continue;
      if (spec.condition.class_value || spec.condition.features.empty()) continue;
      if (qc.samples() >= config.min_samples) continue;
      ConditionalCounts cc = sample_conditional(
          model, spec.condition, config.seed, kStreamTopUp | static_cast<std::uint32_t>(q),
          config.min_samples - qc.samples(), config.top_up_factor * config.min_samples);
      qc.cond_pos = cc.per_class[*spec.target.class_value];
      qc.cond_neg = cc.accepted - qc.cond_pos;
      qc.cond_rejected = cc.rejected;
      result.counters.evaluations += cc.accepted + cc.rejected;
    }
  }

  result.nonambiguous = ambiguity_estimate(result.counters, plan);
  for (const QueryCounters& qc : result.counters.queries) {
    result.estimates.push_back(make_estimate(qc.pos + qc.cond_pos, qc.samples(), plan));
  }
  return result;
}

}  // namespace rfx
