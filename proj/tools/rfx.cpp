// rfx: command-line front end over the rfexplain C API.

#include <chrono>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <optional>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"
#include "rfexplain/rfexplain.h"

namespace {

using json = nlohmann::ordered_json;

constexpr int kExitOk = 0;
constexpr int kExitUsage = 1;
constexpr int kExitInput = 2;
constexpr int kExitCap = 3;

struct Failure {
  int exit_code;
  std::string message;
};

int exit_code_for(rfx_status s) {
  switch (s) {
    case RFX_OK:
      return kExitOk;
    case RFX_E_INVALID_ARGUMENT:
      return kExitUsage;
    case RFX_E_CAP_EXCEEDED:
      return kExitCap;
    default:
      return kExitInput;
  }
}

void check(rfx_status s, const std::string& context = {}) {
  if (s == RFX_OK) return;
  std::string msg = rfx_last_error();
  if (!context.empty()) msg = context + ": " + msg;
  if (s == RFX_E_CAP_EXCEEDED) {
    msg += "; use 'rfx sample' to estimate instead of enumerating";
  }
  throw Failure{exit_code_for(s), msg};
}

// Owns a char* handed out by the library.
struct LibString {
  char* p = nullptr;
  ~LibString() { rfx_free_string(p); }
  std::string str() const { return p ? std::string(p) : std::string(); }
};

struct ForestHandle {
  rfx_forest* f = nullptr;
  ~ForestHandle() { rfx_forest_free(f); }
};

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Failure{kExitInput, "cannot open '" + path + "'"};
  std::ostringstream buf;
  buf << in.rdbuf();
  if (in.bad()) throw Failure{kExitInput, "cannot read '" + path + "'"};
  return buf.str();
}

std::string sha256(const std::string& data) {
  char hex[65];
  check(rfx_sha256_hex(data.data(), data.size(), hex));
  return hex;
}

struct Options {
  std::string input;
  std::string output;
  std::string format = "json";
  std::optional<std::uint64_t> seed;
  std::uint64_t samples = 100000;
  std::uint64_t min_samples = 100;
  unsigned workers = 1;
  bool no_early_stop = false;
  std::string mode = "rejection";
  double delta = 0.9;
  double lift = 1.1;
  double epsilon = 0.1;
  double fail_prob = 0.05;
  bool exact = false;
  std::uint64_t max_exact_classes = std::uint64_t{1} << 22;
  std::vector<std::string> queries;
  std::uint64_t pair_samples = 100;
  std::uint64_t pair_budget = 2000;
  bool keep_redundant = false;
  bool minimize = false;
  std::string reason;
  bool timing = false;
  bool progress = false;
  bool export_bag = false;
};

class Run {
 public:
  Run(std::string command, const Options& o)
      : command_(std::move(command)), o_(o), start_(std::chrono::steady_clock::now()) {}

  bool json_out() const { return o_.format == "json"; }

  void add_input(const std::string& path, const std::string& data) {
    inputs_.push_back({{"path", path}, {"sha256", sha256(data)}});
  }

  json manifest(const json& config) const {
    json m;
    m["command"] = command_;
    m["version"] = rfx_version();
    m["config"] = config;
    m["inputs"] = inputs_;
    if (o_.timing) m["duration_ms"] = elapsed_ms();
    return m;
  }

  std::string text_header(const json& config) const {
    std::string out = "# rfx " + command_ + " " + rfx_version() + "\n";
    for (const auto& in : inputs_) {
      out += "# input " + in["path"].get<std::string>() + " sha256 " +
             in["sha256"].get<std::string>() + "\n";
    }
    for (const auto& [k, v] : config.items()) out += "# " + k + ": " + v.dump() + "\n";
    return out;
  }

  std::string text_footer() const {
    return "# duration: " + std::to_string(elapsed_ms()) + " ms\n";
  }

 private:
  long long elapsed_ms() const {
    return std::chrono::duration_cast<std::chrono::milliseconds>(std::chrono::steady_clock::now() -
                                                                 start_)
        .count();
  }

  std::string command_;
  const Options& o_;
  std::chrono::steady_clock::time_point start_;
  json inputs_ = json::array();
};

rfx_format format_of(const Options& o) {
  return o.format == "json" ? RFX_FORMAT_JSON : RFX_FORMAT_TEXT;
}

void load_forest(Run& run, const std::string& path, ForestHandle& handle) {
  std::string doc = read_file(path);
  run.add_input(path, doc);
  check(rfx_forest_parse(doc.data(), doc.size(), &handle.f), path);
}

std::uint64_t resolve_seed(const Options& o) {
  if (o.seed) return *o.seed;
  std::random_device rd;
  std::uint64_t seed = (std::uint64_t{rd()} << 32) | rd();
  std::cerr << "rfx: no --seed given; using seed " << seed << "\n";
  return seed;
}

void emit(Run& run, const json& config, const std::string& body, rfx_format fmt) {
  if (fmt == RFX_FORMAT_JSON) {
    json env;
    env["manifest"] = run.manifest(config);
    env["results"] = json::parse(body);
    std::cout << env.dump() << "\n";
  } else {
    std::cout << run.text_header(config) << body << run.text_footer();
  }
}

int cmd_inspect(const Options& o) {
  Run run("inspect", o);
  ForestHandle h;
  load_forest(run, o.input, h);
  LibString body;
  if (o.export_bag) {
    check(rfx_bag_export(h.f, &body.p));
    std::cout << body.str();
    return kExitOk;
  }
  check(rfx_inspect(h.f, format_of(o), &body.p));
  emit(run, json::object(), body.str(), format_of(o));
  return kExitOk;
}

int cmd_exact(const Options& o) {
  Run run("exact", o);
  ForestHandle h;
  load_forest(run, o.input, h);
  std::vector<const char*> q;
  for (const auto& s : o.queries) q.push_back(s.c_str());
  rfx_exact_options opts;
  rfx_exact_options_init(&opts);
  opts.max_exact_classes = o.max_exact_classes;
  opts.queries = q.data();
  opts.query_count = q.size();
  LibString body;
  check(rfx_exact(h.f, &opts, format_of(o), &body.p));
  json config{{"max_exact_classes", o.max_exact_classes}, {"queries", o.queries}};
  emit(run, config, body.str(), format_of(o));
  return kExitOk;
}

void progress_to_stderr(std::uint64_t iterations, std::uint64_t nonambiguous, void*) {
  std::cerr << "rfx: " << iterations << " iterations, " << nonambiguous << " non-ambiguous\n";
}

rfx_sample_options sample_options(const Options& o, std::uint64_t seed,
                                  std::vector<const char*>& queries) {
  if (o.mode != "rejection" && o.mode != "conditional") {
    throw Failure{kExitUsage, "--mode must be 'rejection' or 'conditional'"};
  }
  rfx_sample_options opts;
  rfx_sample_options_init(&opts);
  opts.seed = seed;
  opts.max_iterations = o.samples;
  opts.min_samples = o.min_samples;
  opts.workers = o.workers;
  opts.early_stop = o.no_early_stop ? 0 : 1;
  opts.conditional = o.mode == "conditional";
  opts.epsilon = o.epsilon;
  opts.fail_prob = o.fail_prob;
  opts.delta = o.delta;
  opts.lift = o.lift;
  opts.exact = o.exact;
  opts.max_exact_classes = o.max_exact_classes;
  for (const auto& s : o.queries) queries.push_back(s.c_str());
  opts.queries = queries.data();
  opts.query_count = queries.size();
  if (o.progress) opts.progress = progress_to_stderr;
  opts.pair_samples = o.pair_samples;
  opts.pair_budget = o.pair_budget;
  opts.keep_redundant = o.keep_redundant;
  opts.minimize = o.minimize;
  opts.reason = o.reason.empty() ? nullptr : o.reason.c_str();
  return opts;
}

json sample_config(const Options& o, std::uint64_t seed) {
  json c;
  c["seed"] = seed;
  c["samples"] = o.samples;
  c["min_samples"] = o.min_samples;
  c["early_stop"] = !o.no_early_stop;
  c["mode"] = o.mode;
  c["workers"] = o.workers;
  c["epsilon"] = o.epsilon;
  c["fail_prob"] = o.fail_prob;
  c["delta"] = o.delta;
  c["lift"] = o.lift;
  c["exact"] = o.exact;
  c["max_exact_classes"] = o.max_exact_classes;
  c["queries"] = o.queries;
  return c;
}

int cmd_sample(const Options& o) {
  Run run("sample", o);
  ForestHandle h;
  load_forest(run, o.input, h);
  std::uint64_t seed = resolve_seed(o);
  std::vector<const char*> q;
  rfx_sample_options opts = sample_options(o, seed, q);
  LibString body;
  check(rfx_sample(h.f, &opts, format_of(o), &body.p));
  emit(run, sample_config(o, seed), body.str(), format_of(o));
  return kExitOk;
}

void print_record(const char* record, void*) { std::cout << record << "\n" << std::flush; }

int cmd_mine(const Options& o) {
  Run run("mine", o);
  ForestHandle h;
  load_forest(run, o.input, h);
  std::uint64_t seed = resolve_seed(o);
  std::vector<const char*> q;
  rfx_sample_options opts = sample_options(o, seed, q);
  json config = sample_config(o, seed);
  config["pair_samples"] = o.pair_samples;
  config["pair_budget"] = o.pair_budget;
  config["keep_redundant"] = o.keep_redundant;
  config["minimize"] = o.minimize;
  if (!o.reason.empty()) config["reason"] = o.reason;

  // JSON Lines: manifest, one record per reason, then the summary.
  rfx_format fmt = format_of(o);
  if (fmt == RFX_FORMAT_JSON) {
    std::cout << json{{"manifest", run.manifest(config)}}.dump() << "\n" << std::flush;
  } else {
    std::cout << run.text_header(config) << std::flush;
  }
  LibString summary;
  check(rfx_mine(h.f, &opts, fmt, print_record, nullptr, &summary.p));
  if (fmt == RFX_FORMAT_JSON) {
    std::cout << json{{"results", json::parse(summary.str())}}.dump() << "\n";
  } else {
    std::cout << summary.str() << run.text_footer();
  }
  return kExitOk;
}

int cmd_cnf2forest(const Options& o) {
  Run run("cnf2forest", o);
  std::string text = read_file(o.input);
  run.add_input(o.input, text);
  ForestHandle h;
  LibString notes;
  check(rfx_forest_from_dimacs(text.data(), text.size(), &h.f, &notes.p), o.input);
  LibString doc;
  check(rfx_forest_serialize(h.f, &doc.p));
  {
    std::ofstream out(o.output, std::ios::binary);
    out << doc.str() << "\n";
    if (!out) throw Failure{kExitInput, "cannot write '" + o.output + "'"};
  }
  json config{{"output", o.output}};
  emit(run, config, notes.str(), format_of(o));
  return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Explain random forests through argumentation graphs and sampling"};
  app.require_subcommand(1);
  app.set_version_flag("--version", std::string(rfx_version()));
  Options o;

  auto add_format = [&](CLI::App* sub) {
    sub->add_option("--format", o.format, "Output format")
        ->check(CLI::IsMember({"json", "text"}))
        ->capture_default_str();
    sub->add_flag("--timing", o.timing, "Record wall-clock duration in structured output");
  };
  auto add_sampling = [&](CLI::App* sub) {
    sub->add_option("--seed", o.seed, "Random seed (drawn from system entropy when omitted)");
    sub->add_option("--samples", o.samples, "Maximum stage-1 iterations")->capture_default_str();
    sub->add_option("--min-samples", o.min_samples, "Conditioned samples per query before early stop")
        ->capture_default_str();
    sub->add_option("--workers", o.workers, "Worker threads")
        ->check(CLI::PositiveNumber)
        ->capture_default_str();
    sub->add_flag("--no-early-stop", o.no_early_stop, "Run exactly --samples iterations");
    sub->add_option("--mode", o.mode, "rejection or conditional")->capture_default_str();
    sub->add_option("--delta", o.delta, "Reason threshold")->capture_default_str();
    sub->add_option("--lift", o.lift, "Required relative increase over the class prior")
        ->capture_default_str();
    sub->add_option("--epsilon", o.epsilon, "Relative error target of the early-stop rule")
        ->capture_default_str();
    sub->add_option("--fail-prob", o.fail_prob, "Failure probability of the early-stop rule")
        ->capture_default_str();
    sub->add_flag("--exact", o.exact, "Exact probabilities by enumeration");
    sub->add_option("--max-exact-classes", o.max_exact_classes, "Enumeration cap")
        ->capture_default_str();
    sub->add_option("--query", o.queries, "Extra query, e.g. \"C=Pos|B=1,Age<=35\"");
    sub->add_flag("--progress", o.progress, "Report progress on stderr");
    add_format(sub);
  };

  auto* inspect = app.add_subcommand("inspect", "Partition, rule and BAG statistics");
  inspect->add_option("forest", o.input, "Forest document")->required();
  inspect->add_flag("--export-bag", o.export_bag, "Dump the explanation BAG instead");
  add_format(inspect);

  auto* exact = app.add_subcommand("exact", "Exact counts and queries by enumeration");
  exact->add_option("forest", o.input, "Forest document")->required();
  exact->add_option("--query", o.queries, "Query, e.g. \"C=Pos|B=1,Age<=35\"");
  exact->add_option("--max-exact-classes", o.max_exact_classes, "Enumeration cap")
      ->capture_default_str();
  add_format(exact);

  auto* sample = app.add_subcommand("sample", "Stage 1: non-ambiguity and atomic reasons");
  sample->add_option("forest", o.input, "Forest document")->required();
  add_sampling(sample);

  auto* mine = app.add_subcommand("mine", "Stage 2: size-2 sufficient reasons, streamed");
  mine->add_option("forest", o.input, "Forest document")->required();
  add_sampling(mine);
  mine->add_option("--pair-samples", o.pair_samples, "Accepted samples wanted per candidate")
      ->capture_default_str();
  mine->add_option("--pair-budget", o.pair_budget, "Sampling attempts per candidate")
      ->capture_default_str();
  mine->add_flag("--keep-redundant", o.keep_redundant, "Emit dominated pairs flagged redundant");
  mine->add_flag("--minimize", o.minimize, "Shorten reported reasons by greedy deletion");
  mine->add_option("--reason", o.reason,
                   "With --minimize: shorten this reason, e.g. \"C=Pos|A=1,B=1,Age<=35\"");

  auto* cnf = app.add_subcommand("cnf2forest", "Clause-tree forest of a DIMACS 3CNF formula");
  cnf->add_option("dimacs", o.input, "DIMACS CNF file")->required();
  cnf->add_option("out", o.output, "Output forest document")->required();
  add_format(cnf);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    int code = app.exit(e);
    return code == 0 ? kExitOk : kExitUsage;
  }

  try {
    if (*inspect) return cmd_inspect(o);
    if (*exact) return cmd_exact(o);
    if (*sample) return cmd_sample(o);
    if (*mine) return cmd_mine(o);
    if (*cnf) return cmd_cnf2forest(o);
  } catch (const Failure& f) {
    std::cerr << "rfx: " << f.message << "\n";
    return f.exit_code;
  } catch (const std::exception& e) {
    std::cerr << "rfx: " << e.what() << "\n";
    return kExitInput;
  }
  return kExitUsage;
}
