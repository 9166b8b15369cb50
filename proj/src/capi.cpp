#include "rfexplain/rfexplain.h"

#include <openssl/evp.h>

#include <cstring>
#include <memory>
#include <new>
#include <string>

#include "json.hpp"
#include "rfexplain/bag.hpp"
#include "rfexplain/cnf.hpp"
#include "rfexplain/error.hpp"
#include "rfexplain/forest.hpp"
#include "rfexplain/markov.hpp"
#include "rfexplain/miner.hpp"
#include "rfexplain/partition.hpp"
#include "rfexplain/query.hpp"
#include "rfexplain/sampler.hpp"

#ifndef RFX_VERSION
#define RFX_VERSION "0.0.0"
#endif

struct rfx_forest {
  explicit rfx_forest(rfx::Forest f) : forest(std::move(f)), partition(forest) {}

  rfx::Forest forest;
  rfx::DomainPartition partition;
};

namespace {

using json = nlohmann::ordered_json;

thread_local std::string g_last_error;

rfx_status status_of(rfx::ErrorCode code) {
  switch (code) {
    case rfx::ErrorCode::kInvalidArgument:
      return RFX_E_INVALID_ARGUMENT;
    case rfx::ErrorCode::kParse:
      return RFX_E_PARSE;
    case rfx::ErrorCode::kCapExceeded:
      return RFX_E_CAP_EXCEEDED;
    case rfx::ErrorCode::kUnsatisfiable:
      return RFX_E_UNSATISFIABLE;
    case rfx::ErrorCode::kIo:
      return RFX_E_IO;
  }
  return RFX_E_INTERNAL;
}

template <class F>
rfx_status guarded(F&& body) {
  try {
    body();
    g_last_error.clear();
    return RFX_OK;
  } catch (const rfx::Error& e) {
    g_last_error = e.what();
    return status_of(e.code());
  } catch (const std::bad_alloc&) {
    g_last_error = "out of memory";
  } catch (const std::exception& e) {
    g_last_error = e.what();
  } catch (...) {
    g_last_error = "unknown failure";
  }
  return RFX_E_INTERNAL;
}

void require(bool ok, const char* what) {
  if (!ok) throw rfx::Error(rfx::ErrorCode::kInvalidArgument, what);
}

char* copy_out(const std::string& s) {
  char* out = static_cast<char*>(std::malloc(s.size() + 1));
  if (!out) throw std::bad_alloc();
  std::memcpy(out, s.c_str(), s.size() + 1);
  return out;
}

json estimate_json(const rfx::Estimate& e) {
  json j;
  j["value"] = e.value ? json(*e.value) : json(nullptr);
  j["samples"] = e.samples;
  if (e.bound) {
    j["bound"] = {{"epsilon", e.bound->epsilon}, {"delta", e.bound->delta}};
  } else {
    j["bound"] = nullptr;
  }
  return j;
}

std::string estimate_text(const rfx::Estimate& e) {
  if (!e.value) return "n/a (0 samples)";
  std::string out = rfx::format_number(std::round(*e.value * 1e4) / 1e4) + " (" +
                    std::to_string(e.samples) + " samples";
  if (e.bound) {
    out += ", eps " + rfx::format_number(e.bound->epsilon) + " at delta " +
           rfx::format_number(e.bound->delta);
  }
  return out + ")";
}

std::string percent(double fraction) {
  return rfx::format_number(std::round(fraction * 1e4) / 1e2) + "%";
}

std::vector<rfx::QuerySpec> parse_queries(const rfx_forest& f, const char* const* queries,
                                          std::size_t count) {
  require(count == 0 || queries != nullptr, "query list is NULL");
  std::vector<rfx::QuerySpec> out;
  for (std::size_t k = 0; k < count; ++k) {
    require(queries[k] != nullptr, "query string is NULL");
    out.push_back(rfx::parse_query(f.partition, queries[k]));
  }
  return out;
}

json report_object(const rfx::DomainPartition& partition, const rfx::ReasonReport& r) {
  return json::parse(rfx::report_json(partition, r));
}

rfx::SamplerConfig sampler_config(const rfx_sample_options& o) {
  rfx::SamplerConfig c;
  c.seed = o.seed;
  c.max_iterations = o.max_iterations;
  c.min_samples = o.min_samples;
  c.workers = o.workers;
  c.early_stop = o.early_stop != 0;
  c.mode = o.conditional ? rfx::SamplingMode::kConditional : rfx::SamplingMode::kRejection;
  c.epsilon = o.epsilon;
  c.fail_prob = o.fail_prob;
  rfx::validate(c);
  return c;
}

rfx::MinerConfig miner_config(const rfx_sample_options& o) {
  rfx::MinerConfig c;
  c.delta = o.delta;
  c.lift = o.lift;
  c.pair_samples = o.pair_samples;
  c.pair_budget = o.pair_budget;
  c.exact = o.exact != 0;
  c.max_exact_classes = o.max_exact_classes;
  c.keep_redundant = o.keep_redundant != 0;
  rfx::validate(c);
  return c;
}

}  // namespace

extern "C" {

const char* rfx_version(void) { return RFX_VERSION; }

const char* rfx_last_error(void) { return g_last_error.c_str(); }

void rfx_free_string(char* s) { std::free(s); }

rfx_status rfx_forest_parse(const char* document, size_t length, rfx_forest** out) {
  return guarded([&] {
    require(document != nullptr && out != nullptr, "NULL argument");
    *out = nullptr;
    *out = new rfx_forest(rfx::Forest::parse(std::string_view(document, length)));
  });
}

rfx_status rfx_forest_from_dimacs(const char* text, size_t length, rfx_forest** out,
                                  char** notes_json) {
  return guarded([&] {
    require(text != nullptr && out != nullptr, "NULL argument");
    *out = nullptr;
    rfx::CnfFormula formula = rfx::parse_dimacs(std::string_view(text, length));
    auto forest = std::make_unique<rfx_forest>(rfx::reduce_3cnf_to_forest(formula));
    if (notes_json) {
      std::size_t max_leaves = 0, nodes = 0;
      for (const rfx::Tree& t : forest->forest.trees()) {
        max_leaves = std::max(max_leaves, t.leaf_count());
        nodes += t.nodes().size();
      }
      json j;
      j["variables"] = formula.variables;
      j["clauses"] = formula.clauses.size();
      j["trees"] = forest->forest.tree_count();
      j["nodes"] = nodes;
      j["max_leaves"] = max_leaves;
      j["notes"] = formula.notes;
      *notes_json = copy_out(j.dump());
    }
    *out = forest.release();
  });
}

void rfx_forest_free(rfx_forest* forest) { delete forest; }

rfx_status rfx_forest_serialize(const rfx_forest* forest, char** out) {
  return guarded([&] {
    require(forest != nullptr && out != nullptr, "NULL argument");
    *out = copy_out(forest->forest.serialize());
  });
}

rfx_status rfx_classify(const rfx_forest* forest, const char* const* values, size_t count,
                        int64_t* out_class) {
  return guarded([&] {
    require(forest != nullptr && out_class != nullptr && (count == 0 || values != nullptr),
            "NULL argument");
    std::vector<std::string> text;
    for (std::size_t k = 0; k < count; ++k) {
      require(values[k] != nullptr, "value string is NULL");
      text.emplace_back(values[k]);
    }
    rfx::Output out = forest->forest.classify(forest->forest.parse_input(text));
    *out_class = out ? static_cast<int64_t>(*out) : -1;
  });
}

rfx_status rfx_inspect(const rfx_forest* forest, rfx_format format, char** out) {
  return guarded([&] {
    require(forest != nullptr && out != nullptr, "NULL argument");
    const rfx::Forest& f = forest->forest;
    const rfx::DomainPartition& p = forest->partition;
    rfx::Bag bag = rfx::Bag::explanation(f, p);

    json j;
    j["features"] = json::array();
    for (std::size_t i = 0; i < f.feature_count(); ++i) {
      json jf;
      jf["name"] = f.features()[i].name;
      jf["kind"] = f.features()[i].kind == rfx::FeatureKind::kCategorical ? "categorical" : "numeric";
      jf["used"] = p.used(i);
      jf["partition_sets"] = p.set_count(i);
      jf["sets"] = json::array();
      for (const rfx::PartitionSet& s : p.sets(i)) jf["sets"].push_back(s.to_string(f.features()[i]));
      j["features"].push_back(jf);
    }
    j["classes"] = f.classes();
    j["trees"] = f.tree_count();
    j["rules"] = f.rule_count();
    j["bag"] = {{"arguments", bag.size()},
                {"attacks", bag.attacks().size()},
                {"supports", bag.supports().size()}};
    j["equivalence_classes"] = p.class_count();
    j["collapsed_multiplicity"] = p.collapsed_multiplicity();

    if (format == RFX_FORMAT_JSON) {
      *out = copy_out(j.dump());
      return;
    }
    std::string t;
    t += "features: " + std::to_string(f.feature_count()) + "\n";
    for (std::size_t i = 0; i < f.feature_count(); ++i) {
      t += "  " + f.features()[i].name + ": n=" + std::to_string(p.set_count(i)) +
           (p.used(i) ? "" : " (unused, collapsed)") + "\n";
    }
    t += "classes: " + std::to_string(f.class_count()) + "\n";
    t += "trees: " + std::to_string(f.tree_count()) + "\n";
    t += "rules: " + std::to_string(f.rule_count()) + "\n";
    t += "bag: " + std::to_string(bag.size()) + " arguments, " +
         std::to_string(bag.attacks().size()) + " attacks, " +
         std::to_string(bag.supports().size()) + " supports\n";
    t += "equivalence classes: " + std::to_string(p.class_count());
    if (p.collapsed_multiplicity() != 1) {
      t += " (x" + std::to_string(p.collapsed_multiplicity()) + " over unused features)";
    }
    *out = copy_out(t + "\n");
  });
}

rfx_status rfx_bag_export(const rfx_forest* forest, char** out) {
  return guarded([&] {
    require(forest != nullptr && out != nullptr, "NULL argument");
    rfx::Bag bag = rfx::Bag::explanation(forest->forest, forest->partition);
    *out = copy_out(rfx::export_bag(bag, forest->forest, forest->partition));
  });
}

rfx_status rfx_sha256_hex(const void* data, size_t length, char out[65]) {
  return guarded([&] {
    require(out != nullptr && (length == 0 || data != nullptr), "NULL argument");
    unsigned char digest[EVP_MAX_MD_SIZE];
    unsigned int size = 0;
    if (EVP_Digest(data, length, digest, &size, EVP_sha256(), nullptr) != 1 || size != 32) {
      throw std::runtime_error("SHA-256 failed");
    }
    static const char* hex = "0123456789abcdef";
    for (unsigned k = 0; k < 32; ++k) {
      out[2 * k] = hex[digest[k] >> 4];
      out[2 * k + 1] = hex[digest[k] & 15];
    }
    out[64] = '\0';
  });
}

rfx_status rfx_chernoff_sample_size(double p_lower, double epsilon, double delta, uint64_t* out) {
  return guarded([&] {
    require(out != nullptr, "NULL argument");
    *out = rfx::chernoff_sample_size(p_lower, epsilon, delta);
  });
}

void rfx_exact_options_init(rfx_exact_options* options) {
  if (!options) return;
  options->max_exact_classes = rfx::kDefaultMaxExactClasses;
  options->queries = nullptr;
  options->query_count = 0;
}

rfx_status rfx_exact(const rfx_forest* forest, const rfx_exact_options* options,
                     rfx_format format, char** out) {
  return guarded([&] {
    require(forest != nullptr && options != nullptr && out != nullptr, "NULL argument");
    const rfx::Forest& f = forest->forest;
    const rfx::DomainPartition& p = forest->partition;
    std::vector<rfx::QuerySpec> queries = parse_queries(*forest, options->queries, options->query_count);
    rfx::PlausibilityModel model(f, p);
    rfx::ExactCounts counts = rfx::exact_counts(model, queries, options->max_exact_classes);
    rfx::Bag bag = rfx::Bag::explanation(f, p);
    rfx::ExactReasoner reasoner(f, p, bag, options->max_exact_classes);

    double ambiguity = counts.total ? static_cast<double>(counts.ambiguous) /
                                          static_cast<double>(counts.total)
                                    : 0.0;
    json j;
    j["class_count"] = counts.total;
    j["collapsed_multiplicity"] = p.collapsed_multiplicity();
    j["z"] = counts.z;
    j["ambiguous"] = counts.ambiguous;
    j["ambiguity"] = ambiguity;
    j["queries"] = json::array();
    std::string text = "equivalence classes: " + std::to_string(counts.total) + "\n" +
                       "Z (non-ambiguous classes): " + std::to_string(counts.z) + "\n" +
                       "ambiguous: " + std::to_string(counts.ambiguous) + " (" +
                       percent(ambiguity) + ")\n";
    for (std::size_t k = 0; k < queries.size(); ++k) {
      const rfx::QueryCount& q = counts.queries[k];
      std::string name = rfx::describe(p, queries[k]);
      json jq;
      jq["query"] = name;
      jq["numerator"] = q.numerator;
      jq["denominator"] = q.denominator;
      if (q.denominator) {
        double v = static_cast<double>(q.numerator) / static_cast<double>(q.denominator);
        jq["p"] = v;
        text += name + "=" + rfx::format_number(v) + " (" + std::to_string(q.numerator) + "/" +
                std::to_string(q.denominator) + ")\n";
      } else {
        jq["p"] = nullptr;
        text += name + " undefined: the condition has no non-ambiguous support\n";
      }
      j["queries"].push_back(jq);
    }
    j["necessary"] = json::array();
    for (std::size_t y = 0; y < f.class_count(); ++y) {
      rfx::NecessaryFeatures nf = reasoner.maximal_necessary_features(y);
      json jn;
      jn["class"] = f.classes()[y];
      jn["conditions"] = json::array();
      rfx::PartialAssignment side;
      for (rfx::ArgumentId a : nf.arguments) {
        const rfx::Argument& arg = bag.argument(a);
        rfx::FeatureConstraint c{arg.first, arg.second, arg.second};
        side.features.push_back(c);
        jn["conditions"].push_back({{"feature", f.features()[arg.first].name},
                                    {"set", rfx::constraint_set(p, c)}});
      }
      jn["vacuous"] = nf.vacuous;
      j["necessary"].push_back(jn);
      text += "maximal necessary for " + f.classes()[y] + ": " +
              (side.features.empty() ? std::string("(none)") : rfx::describe(p, side)) +
              (nf.vacuous ? " [vacuous]" : "") + "\n";
    }
    *out = copy_out(format == RFX_FORMAT_JSON ? j.dump() : text);
  });
}

void rfx_sample_options_init(rfx_sample_options* o) {
  if (!o) return;
  rfx::SamplerConfig s;
  rfx::MinerConfig m;
  o->seed = s.seed;
  o->max_iterations = s.max_iterations;
  o->min_samples = s.min_samples;
  o->workers = s.workers;
  o->early_stop = s.early_stop ? 1 : 0;
  o->conditional = 0;
  o->epsilon = s.epsilon;
  o->fail_prob = s.fail_prob;
  o->delta = m.delta;
  o->lift = m.lift;
  o->exact = 0;
  o->max_exact_classes = m.max_exact_classes;
  o->queries = nullptr;
  o->query_count = 0;
  o->progress = nullptr;
  o->progress_user = nullptr;
  o->pair_samples = m.pair_samples;
  o->pair_budget = m.pair_budget;
  o->keep_redundant = 0;
  o->minimize = 0;
  o->reason = nullptr;
}

rfx_status rfx_sample(const rfx_forest* forest, const rfx_sample_options* options,
                      rfx_format format, char** out) {
  return guarded([&] {
    require(forest != nullptr && options != nullptr && out != nullptr, "NULL argument");
    const rfx::Forest& f = forest->forest;
    const rfx::DomainPartition& p = forest->partition;
    rfx::SamplerConfig sampler = sampler_config(*options);
    rfx::MinerConfig miner = miner_config(*options);
    std::vector<rfx::QuerySpec> extra = parse_queries(*forest, options->queries, options->query_count);
    rfx::PlausibilityModel model(f, p);

    rfx::ProgressFn progress;
    if (options->progress) {
      progress = [&](const rfx::Counters& c) {
        options->progress(c.iterations(), c.nonambiguous, options->progress_user);
      };
    }
    rfx::Stage1Mining s1 = rfx::mine_stage1(model, sampler, miner, progress);

    // Extra queries: exact or a separate stage-1 run with the same seed.
    std::vector<rfx::Estimate> extra_estimates;
    if (!extra.empty()) {
      if (miner.exact) {
        rfx::ExactCounts c = rfx::exact_counts(model, extra, miner.max_exact_classes);
        for (const rfx::QueryCount& q : c.queries) {
          extra_estimates.push_back(rfx::make_estimate(q.numerator, q.denominator));
        }
      } else {
        extra_estimates = rfx::run_stage1(model, extra, sampler).estimates;
      }
    }

    if (format == RFX_FORMAT_JSON) {
      json j;
      j["exact"] = s1.exact;
      if (!s1.exact) {
        j["iterations"] = s1.counters.iterations();
        j["stopped_early"] = s1.stopped_early;
        j["nonambiguous_count"] = s1.counters.nonambiguous;
        j["ambiguous_count"] = s1.counters.ambiguous;
      }
      j["nonambiguous"] = estimate_json(s1.nonambiguous);
      j["priors"] = json::array();
      for (std::size_t y = 0; y < f.class_count(); ++y) {
        json jp = estimate_json(s1.priors[y]);
        jp["class"] = f.classes()[y];
        j["priors"].push_back(jp);
      }
      for (const char* key : {"sufficient", "necessary", "merged"}) j[key] = json::array();
      for (const auto& r : s1.sufficient) j["sufficient"].push_back(report_object(p, r));
      for (const auto& r : s1.necessary) j["necessary"].push_back(report_object(p, r));
      for (const auto& r : s1.merged) j["merged"].push_back(report_object(p, r));
      j["queries"] = json::array();
      for (std::size_t k = 0; k < extra.size(); ++k) {
        json jq = estimate_json(extra_estimates[k]);
        jq["query"] = rfx::describe(p, extra[k]);
        j["queries"].push_back(jq);
      }
      *out = copy_out(j.dump());
      return;
    }

    std::string t;
    if (!s1.exact) {
      t += "iterations: " + std::to_string(s1.counters.iterations()) +
           (s1.stopped_early ? " (stopped early)" : "") + "\n";
    }
    t += "non-ambiguous fraction: " + estimate_text(s1.nonambiguous) + "\n";
    for (std::size_t y = 0; y < f.class_count(); ++y) {
      t += "P( " + f.classes()[y] + " )=" + estimate_text(s1.priors[y]) + "\n";
    }
    t += "almost sufficient reasons:\n";
    for (const auto& r : s1.sufficient) t += "  " + rfx::report_text(p, r) + "\n";
    t += "almost necessary reasons:\n";
    for (const auto& r : s1.necessary) t += "  " + rfx::report_text(p, r) + "\n";
    t += "merged necessary reasons:\n";
    for (const auto& r : s1.merged) t += "  " + rfx::report_text(p, r) + "\n";
    if (!extra.empty()) {
      t += "queries:\n";
      for (std::size_t k = 0; k < extra.size(); ++k) {
        t += "  " + rfx::describe(p, extra[k]) + "=" + estimate_text(extra_estimates[k]) + "\n";
      }
    }
    *out = copy_out(t);
  });
}

rfx_status rfx_mine(const rfx_forest* forest, const rfx_sample_options* options,
                    rfx_format format, rfx_record_fn on_record, void* user, char** summary) {
  return guarded([&] {
    require(forest != nullptr && options != nullptr && on_record != nullptr, "NULL argument");
    const rfx::Forest& f = forest->forest;
    const rfx::DomainPartition& p = forest->partition;
    rfx::SamplerConfig sampler = sampler_config(*options);
    rfx::MinerConfig miner = miner_config(*options);
    rfx::PlausibilityModel model(f, p);

    auto send = [&](const rfx::ReasonReport& r) {
      std::string record =
          format == RFX_FORMAT_JSON ? rfx::report_json(p, r) : rfx::report_text(p, r);
      on_record(record.c_str(), user);
    };

    json s;
    std::string text;
    if (options->reason) {
      require(options->minimize != 0, "an explicit reason is only used with minimize");
      rfx::QuerySpec q = rfx::parse_query(p, options->reason);
      if (!q.target.class_value || !q.target.features.empty() || q.condition.class_value ||
          q.condition.features.empty()) {
        throw rfx::Error(rfx::ErrorCode::kInvalidArgument,
                         "reason must look like \"C=<class>|<conditions>\"");
      }
      rfx::ReasonReport reason{rfx::ReasonKind::kSufficient, *q.target.class_value,
                               q.condition.features, 0, 0};
      rfx::ReasonReport minimized = rfx::minimize_sufficient(model, reason, miner, sampler.seed);
      bool passes = minimized.p >= miner.delta;
      send(minimized);
      s["sufficient"] = passes;
      text = passes ? "reason minimized\n"
                    : "reason is below the sufficiency threshold; returned unchanged\n";
    } else {
      rfx::Stage1Mining s1 = rfx::mine_stage1(model, sampler, miner);
      rfx::Stage2Summary sum = rfx::stage2_pairs(
          model, s1, sampler, miner, [&](const rfx::ReasonReport& r) {
            send(r);
            if (!options->minimize) return;
            rfx::ReasonReport m = rfx::minimize_sufficient(model, r, miner, sampler.seed);
            if (m.p >= miner.delta) send(m);
          });
      s["stage1"] = {{"exact", s1.exact}, {"nonambiguous", estimate_json(s1.nonambiguous)}};
      if (!s1.exact) s["stage1"]["iterations"] = s1.counters.iterations();
      s["stage2"] = {{"candidates", sum.candidates},
                     {"skipped_unreached", sum.skipped_unreached},
                     {"starved", sum.starved},
                     {"reported", sum.reported},
                     {"redundant", sum.redundant}};
      text = "pairs: " + std::to_string(sum.candidates) + " candidates, " +
             std::to_string(sum.reported) + " reported, " + std::to_string(sum.redundant) +
             " redundant, " + std::to_string(sum.starved) + " starved, " +
             std::to_string(sum.skipped_unreached) + " skipped (unreached in stage 1)\n";
    }
    if (summary) *summary = copy_out(format == RFX_FORMAT_JSON ? s.dump() : text);
  });
}

}  // extern "C"
