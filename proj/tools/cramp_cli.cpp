// cramp command line front end. Links only the C API.

#include <cstdio>
#include <fstream>
#include <iostream>
#include <memory>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "cramp/cramp.h"
#include "json.hpp"

namespace {

using json = nlohmann::json;

constexpr int kExitConfig = 2;
constexpr int kExitData = 3;

struct Failure {
  int code;
  std::string message;
};

void check(cramp_status s) {
  if (s == CRAMP_OK) return;
  throw Failure{cramp_status_is_config(s) ? kExitConfig : kExitData, cramp_last_error()};
}

template <class T, void (*Destroy)(T*)>
struct Handle {
  T* ptr = nullptr;
  ~Handle() { Destroy(ptr); }
  T** out() { return &ptr; }
};

using DatasetHandle = Handle<cramp_dataset, cramp_dataset_destroy>;
using ConfigHandle = Handle<cramp_config, cramp_config_destroy>;
using OutcomeHandle = Handle<cramp_outcome, cramp_outcome_destroy>;
using CacheHandle = Handle<cramp_null_cache, cramp_null_cache_destroy>;

std::string take(char* s) {
  std::string out = s ? s : "";
  cramp_string_free(s);
  return out;
}

struct Common {
  int k = 5;
  int projections = 100;
  int null_reps = 1000;
  double alpha = 0.05;
  std::uint64_t seed = 20240601;
  std::string method;
  std::string input;
  std::string output;
  std::string format = "json";
  int threads = 0;
  std::string cache_dir;
  std::string delimiter = ",";
  bool no_header = false;
  bool label_column = false;
  bool direct = false;
  bool monte_carlo = false;
  int mc_reps = 200;
};

void add_common(CLI::App* app, Common& c, const std::string& default_method) {
  c.method = default_method;
  app->add_option("-k,--proj-dim", c.k, "projected dimension")->capture_default_str();
  app->add_option("-K,--projections", c.projections, "projections per test")->capture_default_str();
  app->add_option("--null-reps", c.null_reps, "null replicates for the critical value")
      ->capture_default_str();
  app->add_option("--alpha", c.alpha, "significance level")->capture_default_str();
  app->add_option("--seed", c.seed, "master seed")->capture_default_str();
  app->add_option("--threads", c.threads, "worker threads (default: CRAMP_THREADS or all cores)");
  app->add_option("--output", c.output, "output file (default: stdout)");
  app->add_option("--format", c.format, "output format")
      ->check(CLI::IsMember({"csv", "json"}))
      ->capture_default_str();
  app->add_option("--cache-dir", c.cache_dir, "directory for cached null distributions");
}

void add_data_options(CLI::App* app, Common& c) {
  app->add_option("--method", c.method, "base test id (or statistic id with --direct)")
      ->capture_default_str();
  app->add_option("--delimiter", c.delimiter, "field delimiter (t for tab)")->capture_default_str();
  app->add_flag("--no-header", c.no_header, "input has no header row");
  app->add_flag("--label-column", c.label_column, "first column holds row labels");
  app->add_flag("--direct", c.direct, "run the statistic on the unprojected data");
  app->add_flag("--monte-carlo", c.monte_carlo, "permutation calibration for direct two-sample tests");
  app->add_option("--mc-reps", c.mc_reps, "permutation replicates")->capture_default_str();
}

char delimiter_char(const std::string& d) {
  if (d == "t" || d == "\\t" || d == "tab") return '\t';
  if (d.size() != 1) throw Failure{kExitConfig, "delimiter must be a single character"};
  return d[0];
}

void emit(const Common& c, const std::string& text) {
  if (c.output.empty()) {
    std::cout << text;
    if (!text.empty() && text.back() != '\n') std::cout << '\n';
    return;
  }
  std::ofstream out(c.output);
  if (!out) throw Failure{kExitData, "cannot write '" + c.output + "'"};
  out << text;
  if (!text.empty() && text.back() != '\n') out << '\n';
}

void load(const Common& c, const std::string& path, DatasetHandle& h) {
  check(cramp_dataset_load(path.c_str(), delimiter_char(c.delimiter), c.no_header ? 0 : 1,
                           c.label_column ? 1 : 0, h.out()));
}

void configure(const Common& c, ConfigHandle& cfg) {
  check(cramp_config_create(cfg.out()));
  check(cramp_config_set_int(cfg.ptr, "k", c.k));
  check(cramp_config_set_int(cfg.ptr, "projections", c.projections));
  check(cramp_config_set_int(cfg.ptr, "null_reps", c.null_reps));
  check(cramp_config_set_int(cfg.ptr, "threads", c.threads));
  check(cramp_config_set_real(cfg.ptr, "alpha", c.alpha));
  check(cramp_config_set_seed(cfg.ptr, c.seed));
  check(cramp_config_set_string(cfg.ptr, "base", c.method.c_str()));
  check(cramp_config_validate(cfg.ptr));
}

json config_json(const Common& c) {
  return {{"k", c.k},         {"projections", c.projections}, {"null_reps", c.null_reps},
          {"alpha", c.alpha}, {"seed", c.seed},               {"method", c.method},
          {"direct", c.direct}};
}

std::string digest(const std::string& path) {
  char* out = nullptr;
  check(cramp_file_digest(path.c_str(), &out));
  return take(out);
}

std::string render_test(const Common& c, const std::string& command, json result,
                        const std::vector<std::string>& inputs) {
  json inputs_json = json::array();
  for (const auto& in : inputs) inputs_json.push_back({{"path", in}, {"digest_fnv1a", digest(in)}});
  if (c.format == "json") {
    json doc = {{"schema_version", 1},
                {"command", command},
                {"result", result},
                {"provenance",
                 {{"version", cramp_version()}, {"config", config_json(c)}, {"inputs", inputs_json}}}};
    return doc.dump(2);
  }
  std::ostringstream os;
  os.precision(17);
  auto num = [&](const char* key) -> std::string {
    if (!result.contains(key) || result[key].is_null()) return "";
    std::ostringstream v;
    v.precision(17);
    v << result[key].get<double>();
    return v.str();
  };
  os << "method,statistic,p_value,mean_p,critical_value,decision\n"
     << c.method << ',' << num("statistic") << ',' << num("p_value") << ',' << num("mean_p")
     << ',' << num("critical_value") << ',' << result["decision"].get<std::string>() << '\n';
  return os.str();
}

json direct_result(const Common& c, const cramp_dataset* x, const cramp_dataset* y) {
  double stat = 0.0;
  double p = 1.0;
  check(cramp_direct_test(c.method.c_str(), x, y, c.monte_carlo ? 1 : 0, c.mc_reps, c.seed,
                          c.threads, &stat, &p));
  return {{"statistic", stat}, {"p_value", p}, {"decision", p <= c.alpha ? "reject" : "do-not-reject"}};
}

json outcome_result(cramp_outcome* o) {
  char* text = nullptr;
  check(cramp_outcome_to_json(o, &text));
  return json::parse(take(text));
}

void cache_handle(const Common& c, CacheHandle& cache) {
  check(cramp_null_cache_create(c.cache_dir.empty() ? nullptr : c.cache_dir.c_str(), cache.out()));
}

void run_test1(const Common& c) {
  DatasetHandle x;
  load(c, c.input, x);
  json result;
  if (c.direct) {
    result = direct_result(c, x.ptr, nullptr);
  } else {
    ConfigHandle cfg;
    configure(c, cfg);
    CacheHandle cache;
    cache_handle(c, cache);
    OutcomeHandle o;
    check(cramp_run_one_sample(cfg.ptr, x.ptr, cache.ptr, 0, o.out()));
    result = outcome_result(o.ptr);
  }
  emit(c, render_test(c, "test1", result, {c.input}));
}

void run_test2(const Common& c, const std::string& input2) {
  DatasetHandle x;
  DatasetHandle y;
  load(c, c.input, x);
  load(c, input2, y);
  json result;
  if (c.direct) {
    result = direct_result(c, x.ptr, y.ptr);
  } else {
    ConfigHandle cfg;
    configure(c, cfg);
    CacheHandle cache;
    cache_handle(c, cache);
    OutcomeHandle o;
    check(cramp_run_two_sample(cfg.ptr, x.ptr, y.ptr, cache.ptr, 0, o.out()));
    result = outcome_result(o.ptr);
  }
  emit(c, render_test(c, "test2", result, {c.input, input2}));
}

void print_row(const char* line, void*) {
  std::cerr << line << std::endl;
}

struct StreamSink {
  std::ofstream* out;
};

void stream_row(const char* line, void* user) {
  auto* sink = static_cast<StreamSink*>(user);
  *sink->out << line << '\n';
  sink->out->flush();
  std::cerr << line << std::endl;
}

void run_simulate(const Common& c) {
  char* text = nullptr;
  const char* cache = c.cache_dir.empty() ? nullptr : c.cache_dir.c_str();
  if (c.format == "csv" && !c.output.empty()) {
    // Rows land in the output file as each cell finishes.
    std::ofstream out(c.output);
    if (!out) throw Failure{kExitData, "cannot write '" + c.output + "'"};
    out << cramp_grid_csv_header() << '\n';
    out.flush();
    StreamSink sink{&out};
    check(cramp_simulate_grid(c.input.c_str(), c.threads, cache, "csv", stream_row, &sink, nullptr));
    return;
  }
  std::cerr << cramp_grid_csv_header() << std::endl;
  check(cramp_simulate_grid(c.input.c_str(), c.threads, cache, c.format.c_str(), print_row,
                            nullptr, &text));
  emit(c, take(text));
}

void run_nulldist(const Common& c, long long n, long long m, long long p) {
  ConfigHandle cfg;
  configure(c, cfg);
  CacheHandle cache;
  cache_handle(c, cache);
  double q = 0.0;
  if (n < 0 || m < 0 || p < 0) throw Failure{kExitConfig, "sizes must be non-negative"};
  check(cramp_critical_value(cfg.ptr, size_t(n), size_t(m), size_t(p), cache.ptr, &q));
  if (c.format == "json") {
    json doc = {{"schema_version", 1}, {"n", n}, {"m", m}, {"p", p},
                {"critical_value", q},  {"config", config_json(c)}};
    emit(c, doc.dump(2));
  } else {
    std::ostringstream os;
    os.precision(17);
    os << "n,m,p,k,K,base,null_reps,alpha,critical_value\n"
       << n << ',' << m << ',' << p << ',' << c.k << ',' << c.projections << ',' << c.method
       << ',' << c.null_reps << ',' << c.alpha << ',' << q << '\n';
    emit(c, os.str());
  }
}

struct GenesArgs {
  std::string group_a;
  std::string group_b;
  std::string methods = "syk,schott,lc,clx,cramp-box,cramp-wald";
  long long top_genes = 0;
  int split_reps = 0;
  std::string split_group;
  std::string split_methods = "cramp-box";
  int subsample_size = 0;
  std::string orientation = "samples";
  std::string strategy = "asymptotic";
  std::string replay;
};

std::vector<std::string> split_commas(const std::string& s) {
  std::vector<std::string> out;
  std::stringstream ss(s);
  std::string item;
  while (std::getline(ss, item, ',')) {
    if (!item.empty()) out.push_back(item);
  }
  return out;
}

void run_genes(const Common& c, const GenesArgs& g) {
  json req;
  if (!g.replay.empty()) {
    std::ifstream in(g.replay);
    if (!in) throw Failure{kExitData, "cannot open '" + g.replay + "'"};
    json prior;
    try {
      prior = json::parse(in);
      req = prior.at("provenance").at("request");
    } catch (const json::exception& e) {
      throw Failure{kExitData, std::string("not a report: ") + e.what()};
    }
  } else {
    if (c.input.empty()) throw Failure{kExitConfig, "--input is required"};
    if (g.group_a.empty() || g.group_b.empty()) {
      throw Failure{kExitConfig, "--group-a and --group-b are required"};
    }
    const char d = delimiter_char(c.delimiter);
    req = {{"input", c.input},
           {"delimiter", d == '\t' ? std::string("t") : std::string(1, d)},
           {"orientation", g.orientation},
           {"header", !c.no_header},
           {"label_column", true},
           {"top_genes", g.top_genes},
           {"group_a", g.group_a},
           {"group_b", g.group_b},
           {"methods", split_commas(g.methods)},
           {"split_reps", g.split_reps},
           {"split_group", g.split_group},
           {"split_methods", split_commas(g.split_methods)},
           {"subsample_size", g.subsample_size},
           {"k", c.k},
           {"projections", c.projections},
           {"null_reps", c.null_reps},
           {"alpha", c.alpha},
           {"seed", c.seed},
           {"strategy", g.strategy},
           {"mc_reps", c.mc_reps}};
  }
  // Thread count and cache location never change results, so they stay out
  // of the recorded request.
  json run = req;
  run["threads"] = c.threads;
  if (!c.cache_dir.empty()) run["cache_dir"] = c.cache_dir;
  char* report = nullptr;
  char* csv = nullptr;
  const cramp_status s = cramp_genes_run(run.dump().c_str(), &report, &csv);
  check(s);
  std::string js = take(report);
  std::string cs = take(csv);
  // Record the request without the run-only fields.
  json doc = json::parse(js);
  doc["provenance"]["request"] = req;
  emit(c, c.format == "json" ? doc.dump(2) : cs);
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Covariance matrix tests with random projections"};
  app.require_subcommand(1);
  app.set_version_flag("--version", std::string(cramp_version()));

  Common t1, t2, sim, nd, gn;
  std::string input2;
  long long nd_n = 0, nd_m = 0, nd_p = 0;
  GenesArgs genes;

  auto* test1 = app.add_subcommand("test1", "one-sample test on a data file");
  add_common(test1, t1, "lrt-identity");
  add_data_options(test1, t1);
  test1->add_option("--input", t1.input, "samples x variables table")->required();

  auto* test2 = app.add_subcommand("test2", "two-sample test on two data files");
  add_common(test2, t2, "box-m");
  add_data_options(test2, t2);
  test2->add_option("--input", t2.input, "first group")->required();
  test2->add_option("--input2", input2, "second group")->required();

  auto* simulate = app.add_subcommand("simulate", "run a simulation grid");
  add_common(simulate, sim, "");
  sim.format = "csv";
  simulate->add_option("--input,--grid", sim.input, "grid config file")->required();

  auto* nulldist = app.add_subcommand("nulldist", "compute and cache an empirical critical value");
  add_common(nulldist, nd, "lrt-identity");
  nulldist->add_option("--method", nd.method, "base test id")->capture_default_str();
  nulldist->add_option("-n,--n", nd_n, "first group size")->required();
  nulldist->add_option("-m,--m", nd_m, "second group size (0 for one sample)");
  nulldist->add_option("-p,--p", nd_p, "dimension")->required();

  auto* gcmd = app.add_subcommand("genes", "two-group gene expression workflow");
  add_common(gcmd, gn, "");
  gcmd->add_option("--input", gn.input, "expression table with a label column");
  gcmd->add_option("--delimiter", gn.delimiter, "field delimiter (t for tab)")->capture_default_str();
  gcmd->add_flag("--no-header", gn.no_header, "input has no header row");
  gcmd->add_option("--orientation", genes.orientation, "samples (rows are samples) or genes")
      ->check(CLI::IsMember({"samples", "genes"}))
      ->capture_default_str();
  gcmd->add_option("--group-a", genes.group_a, "label of the first group");
  gcmd->add_option("--group-b", genes.group_b, "label of the second group");
  gcmd->add_option("--method,--methods", genes.methods, "comma list of methods")->capture_default_str();
  gcmd->add_option("--top-genes", genes.top_genes, "keep genes with the highest minimum intensity");
  gcmd->add_option("--split-reps", genes.split_reps, "random splits for the type I study");
  gcmd->add_option("--split-group", genes.split_group, "group to split (default: the larger)");
  gcmd->add_option("--split-methods", genes.split_methods, "methods for the split study")
      ->capture_default_str();
  gcmd->add_option("--subsample-size", genes.subsample_size, "split group size (0: halves)");
  gcmd->add_option("--strategy", genes.strategy, "asymptotic or monte-carlo")
      ->check(CLI::IsMember({"asymptotic", "monte-carlo"}))
      ->capture_default_str();
  gcmd->add_option("--mc-reps", gn.mc_reps, "permutation replicates")->capture_default_str();
  gcmd->add_option("--replay", genes.replay, "rerun the request recorded in a report");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : kExitConfig;
  }

  try {
    if (*test1) run_test1(t1);
    else if (*test2) run_test2(t2, input2);
    else if (*simulate) run_simulate(sim);
    else if (*nulldist) run_nulldist(nd, nd_n, nd_m, nd_p);
    else if (*gcmd) run_genes(gn, genes);
  } catch (const Failure& f) {
    std::cerr << "error: " << f.message << '\n';
    return f.code;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitData;
  }
  return 0;
}
