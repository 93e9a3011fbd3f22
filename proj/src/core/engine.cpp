#include "cramp/engine.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

#include "cramp/classical.hpp"
#include "cramp/highdim.hpp"
#include "cramp/parallel.hpp"
#include "cramp/projection.hpp"

namespace cramp {
namespace {

constexpr const char* kCacheMagic = "cramp-null-cache 1";

struct BaseName {
  BaseTest test;
  const char* id;
};

constexpr BaseName kBaseNames[] = {
    {BaseTest::lrt_identity, "lrt-identity"}, {BaseTest::lrt_sphericity, "lrt-sphericity"},
    {BaseTest::john, "john"},                 {BaseTest::nagao, "nagao"},
    {BaseTest::lw, "lw"},                     {BaseTest::box_m, "box-m"},
    {BaseTest::wald, "wald"},
};

std::uint64_t fnv1a(const std::string& s) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : s) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

bool is_two_sample(const CrampConfig& cfg) {
  return cfg.hypothesis == Hypothesis::two_sample;
}

void check_shape(const SampleShape& shape, const CrampConfig& cfg) {
  const Eigen::Index smallest = is_two_sample(cfg) ? std::min(shape.n, shape.m) : shape.n;
  if (is_two_sample(cfg) && shape.m < 2) {
    fail(ErrorKind::sample_size, "two-sample test needs a second group");
  }
  if (cfg.k > shape.p) {
    std::ostringstream os;
    os << "projection dimension k=" << cfg.k << " exceeds p=" << shape.p;
    fail(ErrorKind::dimension, os.str());
  }
  if (cfg.k > smallest - 2) {
    std::ostringstream os;
    os << "projection dimension k=" << cfg.k << " needs k <= n - 2 (smallest group n="
       << smallest << ")";
    fail(ErrorKind::dimension, os.str());
  }
}

Matrix stacked_centered(const Matrix& x, const Matrix& y) {
  const Dataset dx(x);
  if (y.size() == 0) return dx.centered();
  const Dataset dy(y);
  Matrix out(x.rows() + y.rows(), x.cols());
  out << dx.centered(), dy.centered();
  return out;
}

double projected_pvalue(const CrampConfig& cfg, const Matrix& z, Eigen::Index n) {
  if (!is_two_sample(cfg)) return base_pvalue(cfg.base, Dataset(z));
  return base_pvalue(cfg.base, Dataset(z.topRows(n)), Dataset(z.bottomRows(z.rows() - n)));
}

std::string hex_double(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%a", v);
  return buf;
}

}  // namespace

const char* to_string(BaseTest b) noexcept {
  for (const auto& e : kBaseNames) {
    if (e.test == b) return e.id;
  }
  return "?";
}

const char* to_string(Hypothesis h) noexcept {
  switch (h) {
    case Hypothesis::one_sample_identity: return "one-sample-identity";
    case Hypothesis::one_sample_sphericity: return "one-sample-sphericity";
    case Hypothesis::two_sample: return "two-sample";
  }
  return "?";
}

BaseTest parse_base_test(const std::string& id) {
  for (const auto& e : kBaseNames) {
    if (id == e.id) return e.test;
  }
  fail(ErrorKind::config, "unknown base test '" + id + "'");
}

Hypothesis parse_hypothesis(const std::string& id) {
  for (Hypothesis h : {Hypothesis::one_sample_identity, Hypothesis::one_sample_sphericity,
                       Hypothesis::two_sample}) {
    if (id == to_string(h)) return h;
  }
  fail(ErrorKind::config, "unknown hypothesis '" + id + "'");
}

Hypothesis hypothesis_of(BaseTest b) noexcept {
  switch (b) {
    case BaseTest::lrt_sphericity:
    case BaseTest::john:
      return Hypothesis::one_sample_sphericity;
    case BaseTest::box_m:
    case BaseTest::wald:
      return Hypothesis::two_sample;
    default:
      return Hypothesis::one_sample_identity;
  }
}

void validate(const CrampConfig& cfg) {
  if (cfg.k < 1) fail(ErrorKind::config, "projection dimension k must be >= 1");
  if (cfg.projections < 1) fail(ErrorKind::config, "need at least one projection (K >= 1)");
  if (cfg.null_reps < 100) {
    fail(ErrorKind::config, "N_null must be >= 100 for a stable quantile");
  }
  if (!(cfg.alpha > 0.0 && cfg.alpha <= 1.0)) {
    fail(ErrorKind::config, "alpha must lie in (0, 1]");
  }
  if (cfg.projections >= (1 << 24)) fail(ErrorKind::config, "too many projections");
  if (hypothesis_of(cfg.base) != cfg.hypothesis) {
    std::ostringstream os;
    os << "base test " << to_string(cfg.base) << " does not test "
       << to_string(cfg.hypothesis);
    fail(ErrorKind::config, os.str());
  }
}

double base_pvalue(BaseTest base, const Dataset& projected) {
  switch (base) {
    case BaseTest::lrt_identity: return lrt_identity(projected).p_value;
    case BaseTest::lrt_sphericity: return lrt_sphericity(projected).p_value;
    case BaseTest::john: return john_sphericity(projected, true).p_value;
    case BaseTest::nagao: return nagao_identity(projected, true).p_value;
    case BaseTest::lw: return lw_identity(projected, true).p_value;
    default: break;
  }
  fail(ErrorKind::config, std::string("base test ") + to_string(base) +
                              " needs two samples");
}

double base_pvalue(BaseTest base, const Dataset& x, const Dataset& y) {
  switch (base) {
    case BaseTest::box_m: return box_m(x, y).p_value;
    case BaseTest::wald: return wald_two_sample(x, y).p_value;
    default: break;
  }
  fail(ErrorKind::config, std::string("base test ") + to_string(base) +
                              " is a one-sample test");
}

double lower_quantile(std::vector<double> sample, double alpha) {
  if (sample.empty()) fail(ErrorKind::argument, "quantile of an empty sample");
  if (!(alpha > 0.0 && alpha <= 1.0)) fail(ErrorKind::argument, "alpha must lie in (0, 1]");
  std::sort(sample.begin(), sample.end());
  const double rank = std::ceil(alpha * double(sample.size()) - 1e-9);
  const std::size_t idx =
      static_cast<std::size_t>(std::clamp(rank, 1.0, double(sample.size()))) - 1;
  return sample[idx];
}

std::pair<Matrix, Matrix> standard_null_data(const SampleShape& shape, RngStream& rng) {
  Matrix x = rng.normal_matrix(shape.n, shape.p);
  Matrix y = shape.m > 0 ? rng.normal_matrix(shape.m, shape.p) : Matrix();
  return {std::move(x), std::move(y)};
}

// ---- cache ----

NullCache::NullCache(std::filesystem::path directory) : directory_(std::move(directory)) {
  std::error_code ec;
  std::filesystem::create_directories(*directory_, ec);
}

std::string NullCache::key(const SampleShape& shape, const CrampConfig& cfg) {
  std::ostringstream os;
  os << "n=" << shape.n << ";m=" << shape.m << ";p=" << shape.p << ";k=" << cfg.k
     << ";K=" << cfg.projections << ";base=" << to_string(cfg.base)
     << ";N=" << cfg.null_reps << ";seed=" << cfg.seed
     << ";sampling=" << static_cast<int>(cfg.null_sampling);
  return os.str();
}

std::filesystem::path NullCache::file_for(const std::string& key) const {
  char name[32];
  std::snprintf(name, sizeof name, "%016llx.null",
                static_cast<unsigned long long>(fnv1a(key)));
  return *directory_ / name;
}

std::optional<std::vector<double>> NullCache::find(const std::string& key) {
  std::lock_guard lock(mutex_);
  if (auto it = memory_.find(key); it != memory_.end()) return it->second;
  if (!directory_) return std::nullopt;

  std::ifstream in(file_for(key));
  if (!in) return std::nullopt;
  std::string magic, stored_key;
  std::size_t count = 0;
  if (!std::getline(in, magic) || magic != kCacheMagic) return std::nullopt;
  if (!std::getline(in, stored_key) || stored_key != key) return std::nullopt;
  if (!(in >> count) || count == 0) return std::nullopt;
  std::vector<double> values;
  values.reserve(count);
  std::string token;
  while (values.size() < count && in >> token) {
    char* end = nullptr;
    const double v = std::strtod(token.c_str(), &end);
    if (end == token.c_str() || *end != '\0' || !std::isfinite(v)) return std::nullopt;
    values.push_back(v);
  }
  if (values.size() != count) return std::nullopt;
  memory_[key] = values;
  return values;
}

void NullCache::store(const std::string& key, const std::vector<double>& sample) {
  std::lock_guard lock(mutex_);
  memory_[key] = sample;
  if (!directory_) return;
  // Write to a temp file and rename so readers never see half a file.
  const auto target = file_for(key);
  auto tmp = target;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::trunc);
    if (!out) return;
    out << kCacheMagic << '\n' << key << '\n' << sample.size() << '\n';
    for (double v : sample) out << hex_double(v) << '\n';
    if (!out) return;
  }
  std::error_code ec;
  std::filesystem::rename(tmp, target, ec);
}

// ---- observed data ----

std::vector<double> projected_pvalues(const Dataset& data, const CrampConfig& cfg,
                                      std::uint64_t observation) {
  validate(cfg);
  if (is_two_sample(cfg)) fail(ErrorKind::config, "two-sample config given one dataset");
  check_shape(SampleShape{data.n(), 0, data.p()}, cfg);
  std::vector<double> out(static_cast<std::size_t>(cfg.projections));
  parallel_for(out.size(), cfg.threads, [&](std::size_t i) {
    RngStream rng(cfg.seed, stream_index(StreamFamily::observed_projection, observation, i));
    const ProjectionMatrix r = generate_projection(cfg.k, data.p(), rng);
    out[i] = base_pvalue(cfg.base, project_dataset(r, data));
  });
  return out;
}

std::vector<double> projected_pvalues(const Dataset& x, const Dataset& y,
                                      const CrampConfig& cfg, std::uint64_t observation) {
  validate(cfg);
  if (!is_two_sample(cfg)) fail(ErrorKind::config, "one-sample config given two datasets");
  if (x.p() != y.p()) fail(ErrorKind::dimension, "groups have different dimensions");
  check_shape(SampleShape{x.n(), y.n(), x.p()}, cfg);
  std::vector<double> out(static_cast<std::size_t>(cfg.projections));
  parallel_for(out.size(), cfg.threads, [&](std::size_t i) {
    RngStream rng(cfg.seed, stream_index(StreamFamily::observed_projection, observation, i));
    const ProjectionMatrix r = generate_projection(cfg.k, x.p(), rng);
    out[i] = base_pvalue(cfg.base, project_dataset(r, x), project_dataset(r, y));
  });
  return out;
}

// ---- null distribution ----

double null_replicate_mean(const SampleShape& shape, const CrampConfig& cfg,
                           std::uint64_t replicate, const NullGenerator& generator) {
  RngStream rng(cfg.seed, stream_index(StreamFamily::null_replicate, replicate));
  const Eigen::Index k = cfg.k;
  double sum = 0.0;

  if (cfg.null_sampling == NullSampling::fresh_data_per_projection) {
    const SampleShape low{shape.n, shape.m, k};
    for (int i = 0; i < cfg.projections; ++i) {
      auto [x, y] = generator(low, rng);
      sum += is_two_sample(cfg) ? base_pvalue(cfg.base, Dataset(std::move(x)),
                                              Dataset(std::move(y)))
                                : base_pvalue(cfg.base, Dataset(std::move(x)));
    }
    return sum / double(cfg.projections);
  }

  auto [x, y] = generator(shape, rng);
  if (cfg.null_sampling == NullSampling::explicit_matrices) {
    Matrix stacked(x.rows() + y.rows(), shape.p);
    if (y.size() == 0) {
      stacked = x;
    } else {
      stacked << x, y;
    }
    for (int i = 0; i < cfg.projections; ++i) {
      const ProjectionMatrix r = generate_projection(k, shape.p, rng);
      sum += projected_pvalue(cfg, stacked * r.values().transpose(), shape.n);
    }
    return sum / double(cfg.projections);
  }

  const ProjectedSampler sampler(stacked_centered(x, y));
  for (int i = 0; i < cfg.projections; ++i) {
    sum += projected_pvalue(cfg, sampler.draw(k, rng), shape.n);
  }
  return sum / double(cfg.projections);
}

NullDistribution empirical_critical_value(const SampleShape& shape, const CrampConfig& cfg,
                                          NullCache* cache, const NullGenerator& generator) {
  validate(cfg);
  check_shape(shape, cfg);
  const std::string key = NullCache::key(shape, cfg);
  NullDistribution out;
  if (cache) {
    if (auto hit = cache->find(key); hit && hit->size() == std::size_t(cfg.null_reps)) {
      out.sample = std::move(*hit);
    }
  }
  if (out.sample.empty()) {
    out.sample.resize(static_cast<std::size_t>(cfg.null_reps));
    parallel_for(out.sample.size(), cfg.threads, [&](std::size_t j) {
      out.sample[j] = null_replicate_mean(shape, cfg, j, generator);
    });
    if (cache) cache->store(key, out.sample);
  }
  out.critical_value = lower_quantile(out.sample, cfg.alpha);
  return out;
}

namespace {

CrampOutcome decide(std::vector<double> pvals, NullDistribution null, const CrampConfig& cfg) {
  CrampOutcome out;
  double sum = 0.0;
  for (double v : pvals) sum += v;
  out.mean_p = sum / double(pvals.size());
  out.per_projection_p = std::move(pvals);
  out.critical_value = null.critical_value;
  out.reject = out.mean_p <= out.critical_value;
  if (cfg.keep_null_sample) out.null_sample = std::move(null.sample);
  return out;
}

}  // namespace

CrampOutcome cramp_test(const Dataset& data, const CrampConfig& cfg, NullCache* cache,
                        std::uint64_t observation) {
  auto pvals = projected_pvalues(data, cfg, observation);
  auto null = empirical_critical_value(SampleShape{data.n(), 0, data.p()}, cfg, cache);
  return decide(std::move(pvals), std::move(null), cfg);
}

CrampOutcome cramp_test(const Dataset& x, const Dataset& y, const CrampConfig& cfg,
                        NullCache* cache, std::uint64_t observation) {
  auto pvals = projected_pvalues(x, y, cfg, observation);
  auto null = empirical_critical_value(SampleShape{x.n(), y.n(), x.p()}, cfg, cache);
  return decide(std::move(pvals), std::move(null), cfg);
}

}  // namespace cramp
