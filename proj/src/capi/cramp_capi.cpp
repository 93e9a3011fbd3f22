#include "cramp/cramp.h"

#include <cstring>
#include <fstream>
#include <memory>
#include <sstream>
#include <string>

#include "cramp/engine.hpp"
#include "cramp/harness.hpp"
#include "cramp/workflow.hpp"
#include "json.hpp"

struct cramp_dataset {
  cramp::Dataset data;
};
struct cramp_config {
  cramp::CrampConfig cfg;
};
struct cramp_outcome {
  cramp::CrampOutcome out;
};
struct cramp_null_cache {
  cramp::NullCache cache;
};

namespace {

using json = nlohmann::json;

constexpr const char* kVersion = "1.0.0";

thread_local std::string last_error;

cramp_status status_of(cramp::ErrorKind kind) {
  using cramp::ErrorKind;
  switch (kind) {
    case ErrorKind::config: return CRAMP_E_CONFIG;
    case ErrorKind::argument: return CRAMP_E_ARGUMENT;
    case ErrorKind::invalid_scenario: return CRAMP_E_INVALID_SCENARIO;
    case ErrorKind::degenerate_input: return CRAMP_E_DEGENERATE;
    case ErrorKind::invalid_matrix: return CRAMP_E_INVALID_MATRIX;
    case ErrorKind::dimension: return CRAMP_E_DIMENSION;
    case ErrorKind::rank_deficient: return CRAMP_E_RANK_DEFICIENT;
    case ErrorKind::sample_size: return CRAMP_E_SAMPLE_SIZE;
    case ErrorKind::parse: return CRAMP_E_PARSE;
    case ErrorKind::io: return CRAMP_E_IO;
    case ErrorKind::non_pd: return CRAMP_E_NON_PD;
  }
  return CRAMP_E_INTERNAL;
}

template <class F>
cramp_status guarded(F&& f) {
  last_error.clear();
  try {
    f();
    return CRAMP_OK;
  } catch (const cramp::Error& e) {
    last_error = e.what();
    return status_of(e.kind());
  } catch (const json::exception& e) {
    last_error = e.what();
    return CRAMP_E_CONFIG;
  } catch (const std::bad_alloc&) {
    last_error = "out of memory";
    return CRAMP_E_INTERNAL;
  } catch (const std::exception& e) {
    last_error = e.what();
    return CRAMP_E_INTERNAL;
  }
}

void need(const void* p, const char* what) {
  if (!p) cramp::fail(cramp::ErrorKind::argument, std::string(what) + " is null");
}

char* dup_string(const std::string& s) {
  char* out = static_cast<char*>(std::malloc(s.size() + 1));
  if (!out) throw std::bad_alloc();
  std::memcpy(out, s.c_str(), s.size() + 1);
  return out;
}

size_t copy_out(const std::vector<double>& v, double* buf, size_t cap) {
  if (buf) std::memcpy(buf, v.data(), std::min(cap, v.size()) * sizeof(double));
  return v.size();
}

std::string outcome_json(const cramp::CrampOutcome& o) {
  json j = {{"mean_p", o.mean_p},
            {"critical_value", o.critical_value},
            {"decision", o.reject ? "reject" : "do-not-reject"},
            {"per_projection_p", o.per_projection_p}};
  if (o.null_sample) j["null_sample"] = *o.null_sample;
  return j.dump(2);
}

template <class T>
T field(const json& j, const char* key, T fallback) {
  if (!j.contains(key) || j.at(key).is_null()) return fallback;
  return j.at(key).get<T>();
}

std::string run_genes(const json& req, std::string* csv) {
  using namespace cramp;
  const std::string input = req.at("input").get<std::string>();
  LoadOptions load;
  const std::string delim = field<std::string>(req, "delimiter", ",");
  if (delim.size() != 1) fail(ErrorKind::config, "delimiter must be a single character");
  load.delimiter = delim == "t" ? '\t' : delim[0];
  const std::string orientation = field<std::string>(req, "orientation", "samples");
  if (orientation == "samples") load.orientation = Orientation::samples_by_genes;
  else if (orientation == "genes") load.orientation = Orientation::genes_by_samples;
  else fail(ErrorKind::config, "orientation must be samples or genes");
  load.header = field<bool>(req, "header", true);
  load.label_column = field<bool>(req, "label_column", true);

  ExpressionMatrix data = load_matrix(input, load);
  const auto top = field<long long>(req, "top_genes", 0);
  if (top > 0 && top < data.genes()) data = select_top_genes(data, top);

  WorkflowOptions opt;
  opt.cramp.k = field<int>(req, "k", opt.cramp.k);
  opt.cramp.projections = field<int>(req, "projections", opt.cramp.projections);
  opt.cramp.null_reps = field<int>(req, "null_reps", opt.cramp.null_reps);
  opt.cramp.alpha = field<double>(req, "alpha", opt.cramp.alpha);
  opt.cramp.seed = field<std::uint64_t>(req, "seed", opt.cramp.seed);
  opt.cramp.threads = field<int>(req, "threads", 0);
  opt.cramp.base = BaseTest::box_m;
  opt.cramp.hypothesis = Hypothesis::two_sample;
  validate(opt.cramp);
  const std::string strategy = field<std::string>(req, "strategy", "asymptotic");
  if (strategy == "asymptotic") opt.strategy = Strategy::asymptotic;
  else if (strategy == "monte-carlo") opt.strategy = Strategy::monte_carlo;
  else fail(ErrorKind::config, "strategy must be asymptotic or monte-carlo");
  opt.mc.replicates = field<int>(req, "mc_reps", 200);
  opt.mc.seed = opt.cramp.seed;
  opt.mc.threads = opt.cramp.threads;

  std::unique_ptr<NullCache> cache;
  const std::string cache_dir = field<std::string>(req, "cache_dir", "");
  cache = cache_dir.empty() ? std::make_unique<NullCache>()
                            : std::make_unique<NullCache>(cache_dir);
  opt.cache = cache.get();

  const std::string group_a = req.at("group_a").get<std::string>();
  const std::string group_b = req.at("group_b").get<std::string>();
  const auto methods = field<std::vector<std::string>>(req, "methods", workflow_methods());
  AnalysisReport report = compare_groups(data, group_a, group_b, methods, opt);

  const int split_reps = field<int>(req, "split_reps", 0);
  if (split_reps > 0) {
    std::string split_group = field<std::string>(req, "split_group", "");
    if (split_group.empty()) {
      split_group = group_rows(data, group_a).rows() >= group_rows(data, group_b).rows()
                        ? group_a
                        : group_b;
    }
    const auto split_methods = field<std::vector<std::string>>(
        req, "split_methods", std::vector<std::string>{"cramp-box"});
    report.splits = split_type1_study(data, split_group, split_reps, split_methods, opt,
                                      field<int>(req, "subsample_size", 0));
  }

  json provenance = {{"tool", "cramp"},
                     {"version", kVersion},
                     {"request", req},
                     {"input_digest_fnv1a", file_digest(input)},
                     {"samples", data.samples()},
                     {"genes", data.genes()},
                     {"dropped_rows", data.dropped_rows}};
  report.provenance_json = provenance.dump();
  if (csv) {
    std::ostringstream os;
    write_report_csv(os, report);
    *csv = os.str();
  }
  return report_json(report);
}

}  // namespace

extern "C" {

const char* cramp_version(void) { return kVersion; }
const char* cramp_last_error(void) { return last_error.c_str(); }

int cramp_status_is_config(cramp_status status) {
  return status == CRAMP_E_CONFIG || status == CRAMP_E_ARGUMENT ||
         status == CRAMP_E_INVALID_SCENARIO;
}

void cramp_string_free(char* s) { std::free(s); }

cramp_status cramp_file_digest(const char* path, char** out) {
  return guarded([&] {
    need(path, "path");
    need(out, "out");
    *out = dup_string(cramp::file_digest(path));
  });
}

cramp_status cramp_dataset_create(const double* values, size_t n, size_t p,
                                  cramp_dataset** out) {
  return guarded([&] {
    need(values, "values");
    need(out, "out");
    cramp::Matrix m(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(p));
    for (size_t i = 0; i < n; ++i) {
      for (size_t j = 0; j < p; ++j) m(Eigen::Index(i), Eigen::Index(j)) = values[i * p + j];
    }
    *out = new cramp_dataset{cramp::Dataset(std::move(m))};
  });
}

cramp_status cramp_dataset_load(const char* path, char delimiter, int header, int label_column,
                                cramp_dataset** out) {
  return guarded([&] {
    need(path, "path");
    need(out, "out");
    cramp::LoadOptions opt;
    opt.delimiter = delimiter;
    opt.header = header != 0;
    opt.label_column = label_column != 0;
    auto m = cramp::load_matrix(path, opt);
    *out = new cramp_dataset{cramp::Dataset(std::move(m.values))};
  });
}

void cramp_dataset_destroy(cramp_dataset* d) { delete d; }
size_t cramp_dataset_rows(const cramp_dataset* d) { return d ? size_t(d->data.n()) : 0; }
size_t cramp_dataset_cols(const cramp_dataset* d) { return d ? size_t(d->data.p()) : 0; }

cramp_status cramp_config_create(cramp_config** out) {
  return guarded([&] {
    need(out, "out");
    *out = new cramp_config{};
  });
}

void cramp_config_destroy(cramp_config* c) { delete c; }

cramp_status cramp_config_set_int(cramp_config* c, const char* key, int64_t value) {
  return guarded([&] {
    need(c, "config");
    need(key, "key");
    const std::string k = key;
    if (value < INT32_MIN || value > INT32_MAX) cramp::fail(cramp::ErrorKind::config, k + " out of range");
    const int v = static_cast<int>(value);
    if (k == "k") c->cfg.k = v;
    else if (k == "projections") c->cfg.projections = v;
    else if (k == "null_reps") c->cfg.null_reps = v;
    else if (k == "threads") c->cfg.threads = v;
    else if (k == "keep_null_sample") c->cfg.keep_null_sample = v != 0;
    else cramp::fail(cramp::ErrorKind::config, "unknown integer key '" + k + "'");
  });
}

cramp_status cramp_config_set_real(cramp_config* c, const char* key, double value) {
  return guarded([&] {
    need(c, "config");
    need(key, "key");
    if (std::string(key) != "alpha") {
      cramp::fail(cramp::ErrorKind::config, "unknown real key '" + std::string(key) + "'");
    }
    c->cfg.alpha = value;
  });
}

cramp_status cramp_config_set_string(cramp_config* c, const char* key, const char* value) {
  return guarded([&] {
    need(c, "config");
    need(key, "key");
    need(value, "value");
    const std::string k = key;
    const std::string v = value;
    if (k == "base") {
      c->cfg.base = cramp::parse_base_test(v);
      c->cfg.hypothesis = cramp::hypothesis_of(c->cfg.base);
    } else if (k == "hypothesis") {
      c->cfg.hypothesis = cramp::parse_hypothesis(v);
    } else if (k == "null_sampling") {
      if (v == "reduced") c->cfg.null_sampling = cramp::NullSampling::reduced;
      else if (v == "explicit") c->cfg.null_sampling = cramp::NullSampling::explicit_matrices;
      else if (v == "fresh") c->cfg.null_sampling = cramp::NullSampling::fresh_data_per_projection;
      else cramp::fail(cramp::ErrorKind::config, "unknown null_sampling '" + v + "'");
    } else {
      cramp::fail(cramp::ErrorKind::config, "unknown string key '" + k + "'");
    }
  });
}

cramp_status cramp_config_set_seed(cramp_config* c, uint64_t seed) {
  return guarded([&] {
    need(c, "config");
    c->cfg.seed = seed;
  });
}

cramp_status cramp_config_validate(const cramp_config* c) {
  return guarded([&] {
    need(c, "config");
    cramp::validate(c->cfg);
  });
}

cramp_status cramp_null_cache_create(const char* directory, cramp_null_cache** out) {
  return guarded([&] {
    need(out, "out");
    *out = directory ? new cramp_null_cache{cramp::NullCache(directory)}
                     : new cramp_null_cache{};
  });
}

void cramp_null_cache_destroy(cramp_null_cache* cache) { delete cache; }

cramp_status cramp_run_one_sample(const cramp_config* c, const cramp_dataset* x,
                                  cramp_null_cache* cache, uint64_t observation,
                                  cramp_outcome** out) {
  return guarded([&] {
    need(c, "config");
    need(x, "dataset");
    need(out, "out");
    auto o = cramp::cramp_test(x->data, c->cfg, cache ? &cache->cache : nullptr, observation);
    *out = new cramp_outcome{std::move(o)};
  });
}

cramp_status cramp_run_two_sample(const cramp_config* c, const cramp_dataset* x,
                                  const cramp_dataset* y, cramp_null_cache* cache,
                                  uint64_t observation, cramp_outcome** out) {
  return guarded([&] {
    need(c, "config");
    need(x, "first dataset");
    need(y, "second dataset");
    need(out, "out");
    auto o = cramp::cramp_test(x->data, y->data, c->cfg, cache ? &cache->cache : nullptr,
                               observation);
    *out = new cramp_outcome{std::move(o)};
  });
}

void cramp_outcome_destroy(cramp_outcome* o) { delete o; }
double cramp_outcome_mean_p(const cramp_outcome* o) { return o ? o->out.mean_p : NAN; }
double cramp_outcome_critical_value(const cramp_outcome* o) {
  return o ? o->out.critical_value : NAN;
}
int cramp_outcome_reject(const cramp_outcome* o) { return o && o->out.reject ? 1 : 0; }

size_t cramp_outcome_pvalues(const cramp_outcome* o, double* buf, size_t cap) {
  return o ? copy_out(o->out.per_projection_p, buf, cap) : 0;
}

size_t cramp_outcome_null_sample(const cramp_outcome* o, double* buf, size_t cap) {
  return o && o->out.null_sample ? copy_out(*o->out.null_sample, buf, cap) : 0;
}

cramp_status cramp_outcome_to_json(const cramp_outcome* o, char** out) {
  return guarded([&] {
    need(o, "outcome");
    need(out, "out");
    *out = dup_string(outcome_json(o->out));
  });
}

cramp_status cramp_critical_value(const cramp_config* c, size_t n, size_t m, size_t p,
                                  cramp_null_cache* cache, double* critical_value) {
  return guarded([&] {
    need(c, "config");
    need(critical_value, "critical_value");
    const cramp::SampleShape shape{Eigen::Index(n), Eigen::Index(m), Eigen::Index(p)};
    *critical_value =
        cramp::empirical_critical_value(shape, c->cfg, cache ? &cache->cache : nullptr)
            .critical_value;
  });
}

cramp_status cramp_direct_test(const char* method, const cramp_dataset* x,
                               const cramp_dataset* y, int monte_carlo, int mc_replicates,
                               uint64_t seed, int threads, double* statistic,
                               double* p_value) {
  return guarded([&] {
    need(method, "method");
    need(x, "dataset");
    cramp::MonteCarloOptions mc;
    mc.replicates = mc_replicates;
    mc.seed = seed;
    mc.threads = threads;
    const auto r = cramp::direct_test(
        method, x->data, y ? &y->data : nullptr,
        monte_carlo ? cramp::Strategy::monte_carlo : cramp::Strategy::asymptotic, mc);
    if (statistic) *statistic = r.statistic;
    if (p_value) *p_value = r.p_value;
  });
}

const char* cramp_grid_csv_header(void) {
  static const std::string header = cramp::row_csv_header();
  return header.c_str();
}

cramp_status cramp_simulate_grid(const char* grid_path, int threads, const char* cache_dir,
                                 const char* format, cramp_row_callback on_row, void* user,
                                 char** out) {
  return guarded([&] {
    need(grid_path, "grid path");
    const std::string fmt = format ? format : "csv";
    if (fmt != "csv" && fmt != "json") {
      cramp::fail(cramp::ErrorKind::config, "format must be csv or json");
    }
    const auto grid = cramp::load_grid(grid_path);
    std::unique_ptr<cramp::NullCache> cache =
        cache_dir ? std::make_unique<cramp::NullCache>(cache_dir)
                  : std::make_unique<cramp::NullCache>();
    cramp::StudyOptions options;
    options.threads = threads;
    options.cache = cache.get();
    if (on_row) {
      options.on_row = [&](const cramp::StudyRow& row) {
        on_row(cramp::row_csv_line(row).c_str(), user);
      };
    }
    const auto rows = cramp::run_study(grid, options);
    if (out) {
      if (fmt == "json") {
        *out = dup_string(cramp::rows_json(rows));
      } else {
        std::ostringstream os;
        cramp::write_rows_csv(os, rows);
        *out = dup_string(os.str());
      }
    }
  });
}

cramp_status cramp_genes_run(const char* request_json, char** report_json,
                             char** report_csv) {
  return guarded([&] {
    need(request_json, "request");
    const json req = json::parse(request_json);
    std::string csv;
    const std::string js = run_genes(req, report_csv ? &csv : nullptr);
    if (report_json) *report_json = dup_string(js);
    if (report_csv) *report_csv = dup_string(csv);
  });
}

}  // extern "C"
