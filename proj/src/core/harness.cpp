#include "cramp/harness.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <fstream>
#include <map>
#include <sstream>

#include "cramp/highdim.hpp"
#include "cramp/parallel.hpp"
#include "json.hpp"

namespace cramp {
namespace {

struct CovName {
  CovModel model;
  const char* id;
};

constexpr CovName kCovNames[] = {
    {CovModel::identity, "identity"},
    {CovModel::sphere, "sphere"},
    {CovModel::band, "band"},
    {CovModel::tail_diag, "tail-diag"},
    {CovModel::gamma_diag, "gamma-diag"},
    {CovModel::band_congruence, "band-congruence"},
    {CovModel::shared_diag, "shared-diag"},
    {CovModel::scaled, "scaled"},
};

const std::vector<std::string> kDirectIds = {
    "lrt-identity", "lrt-sphericity", "john", "nagao", "lw", "syk-u", "syk-v", "czz-u",
    "czz-v",        "box-m",          "wald", "schott", "syk2", "lc", "clx"};

[[noreturn]] void bad_scenario(const std::string& what) {
  fail(ErrorKind::invalid_scenario, what);
}

Matrix diag_uniform(Eigen::Index p, double lo, double hi, RngStream& rng) {
  Vector d(p);
  for (Eigen::Index i = 0; i < p; ++i) d[i] = rng.uniform(lo, hi);
  return d.asDiagonal();
}

Matrix checked_band(Eigen::Index p, double rho, Eigen::Index width, double b) {
  Matrix band = band_matrix(p, rho, width);
  Eigen::LLT<Matrix> llt(band);
  if (llt.info() != Eigen::Success) {
    std::ostringstream os;
    os << "band matrix with rho=" << rho << ", B=" << b << " is not positive definite";
    bad_scenario(os.str());
  }
  return band;
}

Matrix tail_diag(Eigen::Index p, Eigen::Index switch_at, double eps) {
  Vector d = Vector::Ones(p);
  for (Eigen::Index i = std::min(switch_at, p); i < p; ++i) d[i] = 1.0 + eps;
  return d.asDiagonal();
}

Matrix gamma_diag(Eigen::Index p, double fraction, RngStream& rng) {
  const auto keep = static_cast<Eigen::Index>(std::floor(fraction * double(p)));
  Vector d = Vector::Ones(p);
  for (Eigen::Index i = std::min(keep, p); i < p; ++i) d[i] = rng.gamma(4.0, 2.0);
  return d.asDiagonal();
}

bool is_diagonal(const Matrix& m) {
  for (Eigen::Index j = 0; j < m.cols(); ++j) {
    for (Eigen::Index i = 0; i < m.rows(); ++i) {
      if (i != j && m(i, j) != 0.0) return false;
    }
  }
  return true;
}

std::string csv_field(const std::string& s) {
  if (s.find_first_of(",\"\n") == std::string::npos) return s;
  std::string out = "\"";
  for (char c : s) {
    if (c == '"') out += '"';
    out += c;
  }
  return out + "\"";
}

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return "";
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

std::vector<std::string> split_list(const std::string& s) {
  std::vector<std::string> out;
  std::stringstream ss(s);
  std::string item;
  while (std::getline(ss, item, ',')) out.push_back(trim(item));
  return out;
}

long long to_int(const std::string& key, const std::string& v) {
  try {
    std::size_t used = 0;
    const long long out = std::stoll(v, &used);
    if (used == v.size()) return out;
  } catch (const std::exception&) {
  }
  fail(ErrorKind::config, "grid key '" + key + "' expects an integer, got '" + v + "'");
}

double to_real(const std::string& key, const std::string& v) {
  try {
    std::size_t used = 0;
    const double out = std::stod(v, &used);
    if (used == v.size()) return out;
  } catch (const std::exception&) {
  }
  fail(ErrorKind::config, "grid key '" + key + "' expects a number, got '" + v + "'");
}

using KeyValues = std::vector<std::pair<std::string, std::string>>;

StudyCell cell_from(const KeyValues& kv) {
  StudyCell cell;
  ScenarioSpec& s = cell.scenario;
  MethodSpec& me = cell.method;
  bool m_given = false;
  bool base_given = false;
  for (const auto& [key, v] : kv) {
    if (key == "label") cell.label = v;
    else if (key == "method") me.id = v;
    else if (key == "base") { me.cramp.base = parse_base_test(v); base_given = true; }
    else if (key == "k") me.cramp.k = int(to_int(key, v));
    else if (key == "projections" || key == "K") me.cramp.projections = int(to_int(key, v));
    else if (key == "null_reps") me.cramp.null_reps = int(to_int(key, v));
    else if (key == "null_sampling") {
      if (v == "reduced") me.cramp.null_sampling = NullSampling::reduced;
      else if (v == "explicit") me.cramp.null_sampling = NullSampling::explicit_matrices;
      else if (v == "fresh") me.cramp.null_sampling = NullSampling::fresh_data_per_projection;
      else fail(ErrorKind::config, "unknown null_sampling '" + v + "'");
    }
    else if (key == "alpha") { me.alpha = to_real(key, v); me.cramp.alpha = me.alpha; }
    else if (key == "seed") {
      s.seed = std::uint64_t(to_int(key, v));
      me.cramp.seed = s.seed;
    }
    else if (key == "strategy") {
      if (v == "asymptotic" || v == "analytic") me.strategy = Strategy::asymptotic;
      else if (v == "monte-carlo") me.strategy = Strategy::monte_carlo;
      else fail(ErrorKind::config, "unknown strategy '" + v + "'");
    }
    else if (key == "mc_reps") me.mc_replicates = int(to_int(key, v));
    else if (key == "n") s.n = to_int(key, v);
    else if (key == "m") { s.m = to_int(key, v); m_given = true; }
    else if (key == "p") s.p = to_int(key, v);
    else if (key == "cov") s.cov = parse_cov_model(v);
    else if (key == "sigma") s.sigma = to_real(key, v);
    else if (key == "rho") s.rho = to_real(key, v);
    else if (key == "bandwidth" || key == "B") s.bandwidth = to_real(key, v);
    else if (key == "fraction") s.fraction = to_real(key, v);
    else if (key == "eps") s.eps = to_real(key, v);
    else if (key == "scale") s.scale = to_real(key, v);
    else if (key == "mean") {
      if (v == "zero") s.mean = MeanModel::zero;
      else if (v == "uniform") s.mean = MeanModel::uniform;
      else fail(ErrorKind::config, "unknown mean model '" + v + "'");
    }
    else if (key == "replicates") s.replicates = int(to_int(key, v));
    else if (key == "threads") {}
    else fail(ErrorKind::config, "unknown grid key '" + key + "'");
  }
  if (me.id == "cramp") {
    if (!base_given) fail(ErrorKind::config, "cramp cell needs a base test");
    me.cramp.hypothesis = hypothesis_of(me.cramp.base);
  }
  s.two_sample = method_hypothesis(me) == Hypothesis::two_sample;
  if (s.two_sample && !m_given) s.m = s.n;
  if (!s.two_sample) s.m = 0;
  if (cell.label.empty()) {
    std::ostringstream os;
    os << method_label(me) << ":" << to_string(s.cov) << ":n" << s.n;
    if (s.two_sample) os << "m" << s.m;
    os << "p" << s.p;
    cell.label = os.str();
  }
  return cell;
}

void expand(const std::vector<std::pair<std::string, std::vector<std::string>>>& lists,
            std::size_t at, KeyValues& current, std::vector<StudyCell>& out) {
  if (at == lists.size()) {
    out.push_back(cell_from(current));
    validate_cell(out.back());
    return;
  }
  for (const auto& v : lists[at].second) {
    current.emplace_back(lists[at].first, v);
    expand(lists, at + 1, current, out);
    current.pop_back();
  }
}

}  // namespace

const char* to_string(CovModel c) noexcept {
  for (const auto& e : kCovNames) {
    if (e.model == c) return e.id;
  }
  return "?";
}

CovModel parse_cov_model(const std::string& id) {
  for (const auto& e : kCovNames) {
    if (id == e.id) return e.model;
  }
  fail(ErrorKind::config, "unknown covariance model '" + id + "'");
}

Matrix band_matrix(Eigen::Index p, double rho, Eigen::Index width) {
  Matrix out = Matrix::Zero(p, p);
  for (Eigen::Index i = 0; i < p; ++i) {
    const Eigen::Index hi = std::min(p - 1, i + width);
    for (Eigen::Index j = std::max<Eigen::Index>(0, i - width); j <= hi; ++j) {
      out(i, j) = std::pow(rho, double(std::abs(i - j)));
    }
  }
  return out;
}

ScenarioCovariance build_covariance(const ScenarioSpec& s, RngStream& rng) {
  const Eigen::Index p = s.p;
  if (p < 1) bad_scenario("scenario needs p >= 1");
  if (!(s.rho >= 0.0 && s.rho < 1.0)) bad_scenario("band parameter rho must lie in [0, 1)");
  if (!(s.bandwidth >= 0.0)) bad_scenario("bandwidth B must be >= 0");
  if (!(s.fraction >= 0.0 && s.fraction <= 1.0)) bad_scenario("band fraction must lie in [0, 1]");
  if (!(s.sigma > 0.0)) bad_scenario("sphere sigma must be positive");
  if (!(s.eps > -1.0)) bad_scenario("tail inflation eps must exceed -1");
  if (!(s.scale > 0.0)) bad_scenario("scale must be positive");

  const auto abs_width = static_cast<Eigen::Index>(std::floor(s.bandwidth));
  const auto frac_width = static_cast<Eigen::Index>(std::floor(s.fraction * double(p)));
  const Matrix eye = Matrix::Identity(p, p);

  Matrix s1;
  Matrix s2;
  switch (s.cov) {
    case CovModel::identity:
      s1 = eye;
      s2 = eye;
      break;
    case CovModel::sphere:
      s1 = s.sigma * s.sigma * eye;
      s2 = s1;
      break;
    case CovModel::band:
      s1 = eye;
      s2 = checked_band(p, s.rho, abs_width, s.bandwidth);
      break;
    case CovModel::tail_diag:
      s1 = eye;
      s2 = tail_diag(p, abs_width, s.eps);
      break;
    case CovModel::gamma_diag:
      s1 = eye;
      s2 = gamma_diag(p, s.fraction, rng);
      break;
    case CovModel::band_congruence: {
      const Matrix omega = checked_band(p, s.rho, frac_width, s.fraction);
      s1 = diag_uniform(p, 1.0, 3.0, rng);
      const Vector root = s1.diagonal().cwiseSqrt();
      s2 = root.asDiagonal() * omega * root.asDiagonal();
      break;
    }
    case CovModel::shared_diag:
      s1 = diag_uniform(p, 0.5, 2.0, rng);
      s2 = s1;
      break;
    case CovModel::scaled:
      s1 = diag_uniform(p, 0.5, 2.0, rng);
      s2 = s.scale * s1;
      break;
  }
  // One-sample scenarios take the alternative side; null-only models are the
  // same on both sides.
  if (!s.two_sample) {
    if (s.cov == CovModel::scaled) return ScenarioCovariance{CovMatrix(s.scale * eye), {}};
    return ScenarioCovariance{CovMatrix(std::move(s2)), {}};
  }
  return ScenarioCovariance{CovMatrix(std::move(s1)), CovMatrix(std::move(s2))};
}

GaussianSampler::GaussianSampler(Vector mean, const CovMatrix& cov)
    : mean_(std::move(mean)) {
  if (mean_.size() != cov.p()) fail(ErrorKind::dimension, "mean and covariance sizes differ");
  if (is_diagonal(cov.values())) {
    const Vector d = cov.values().diagonal();
    if ((d.array() <= 0.0).any()) {
      fail(ErrorKind::non_pd, "covariance has a non-positive variance");
    }
    diagonal_ = true;
    scale_ = d.cwiseSqrt();
    return;
  }
  Eigen::LLT<Matrix> llt(cov.values());
  if (llt.info() != Eigen::Success) {
    fail(ErrorKind::non_pd, "covariance is not positive definite");
  }
  lower_ = llt.matrixL();
}

Matrix GaussianSampler::draw(Eigen::Index n, RngStream& rng) const {
  Matrix z = rng.normal_matrix(n, p());
  if (diagonal_) {
    z = z * scale_.asDiagonal();
  } else {
    z = z * lower_.transpose();
  }
  z.rowwise() += mean_.transpose();
  return z;
}

Dataset sample_gaussian(const Vector& mean, const CovMatrix& cov, Eigen::Index n,
                        RngStream& rng) {
  return Dataset(GaussianSampler(mean, cov).draw(n, rng));
}

std::string method_label(const MethodSpec& m) {
  if (m.id == "cramp") return std::string("cramp-") + to_string(m.cramp.base);
  if (m.strategy == Strategy::monte_carlo) return m.id + "-mc";
  return m.id;
}

Hypothesis method_hypothesis(const MethodSpec& m) {
  if (m.id == "cramp") return m.cramp.hypothesis;
  static const std::map<std::string, Hypothesis> table = {
      {"lrt-identity", Hypothesis::one_sample_identity},
      {"nagao", Hypothesis::one_sample_identity},
      {"lw", Hypothesis::one_sample_identity},
      {"syk-v", Hypothesis::one_sample_identity},
      {"czz-v", Hypothesis::one_sample_identity},
      {"lrt-sphericity", Hypothesis::one_sample_sphericity},
      {"john", Hypothesis::one_sample_sphericity},
      {"syk-u", Hypothesis::one_sample_sphericity},
      {"czz-u", Hypothesis::one_sample_sphericity},
  };
  if (auto it = table.find(m.id); it != table.end()) return it->second;
  if (std::find(kDirectIds.begin(), kDirectIds.end(), m.id) == kDirectIds.end()) {
    fail(ErrorKind::config, "unknown method '" + m.id + "'");
  }
  return Hypothesis::two_sample;
}

void validate_cell(const StudyCell& cell) {
  const ScenarioSpec& s = cell.scenario;
  if (s.replicates < 1) fail(ErrorKind::config, "cell '" + cell.label + "' has no replicates");
  const bool two = method_hypothesis(cell.method) == Hypothesis::two_sample;
  if (two != s.two_sample) {
    fail(ErrorKind::config, "cell '" + cell.label + "' mixes one- and two-sample settings");
  }
  if (s.n < 2 || (two && s.m < 2) || s.p < 1) {
    fail(ErrorKind::config, "cell '" + cell.label + "' has invalid sample sizes");
  }
  if (!(cell.method.alpha > 0.0 && cell.method.alpha <= 1.0)) {
    fail(ErrorKind::config, "alpha must lie in (0, 1]");
  }
  if (cell.method.strategy == Strategy::monte_carlo && cell.method.mc_replicates < 1) {
    fail(ErrorKind::config, "monte-carlo strategy needs mc_reps >= 1");
  }
  if (cell.method.id == "cramp") validate(cell.method.cramp);
}

bool is_null_scenario(const ScenarioCovariance& cov, Hypothesis h) {
  const Matrix& a = cov.sigma1.values();
  const Eigen::Index p = a.rows();
  switch (h) {
    case Hypothesis::one_sample_identity:
      return (a - Matrix::Identity(p, p)).cwiseAbs().maxCoeff() <= 1e-12;
    case Hypothesis::one_sample_sphericity: {
      const double c = a.trace() / double(p);
      return (a - c * Matrix::Identity(p, p)).cwiseAbs().maxCoeff() <= 1e-12 * std::abs(c);
    }
    case Hypothesis::two_sample:
      return cov.sigma2 && (a - cov.sigma2->values()).cwiseAbs().maxCoeff() <=
                               1e-12 * std::max(1.0, a.cwiseAbs().maxCoeff());
  }
  return false;
}

TestResult direct_test(const std::string& id, const Dataset& x, const Dataset* y,
                       Strategy strategy, const MonteCarloOptions& mc) {
  if (id == "lrt-identity") return lrt_identity(x);
  if (id == "lrt-sphericity") return lrt_sphericity(x);
  if (id == "john") return john_sphericity(x, true);
  if (id == "nagao") return nagao_identity(x, true);
  if (id == "lw") return lw_identity(x, true);
  if (id == "syk-u") return syk_one_sample(x).sphericity;
  if (id == "syk-v") return syk_one_sample(x).identity;
  if (id == "czz-u") return czz_one_sample(x).sphericity;
  if (id == "czz-v") return czz_one_sample(x).identity;
  if (std::find(kDirectIds.begin(), kDirectIds.end(), id) == kDirectIds.end()) {
    fail(ErrorKind::config, "unknown method '" + id + "'");
  }
  if (!y) fail(ErrorKind::config, "method " + id + " needs two samples");
  if (id == "box-m") return box_m(x, *y);
  if (id == "wald") return wald_two_sample(x, *y);
  if (id == "schott") return schott_two_sample(x, *y, strategy, mc);
  if (id == "syk2") return syk_two_sample(x, *y, strategy, mc);
  if (id == "lc") return li_chen_two_sample(x, *y, strategy, mc);
  return clx_two_sample(x, *y, strategy, mc);
}

bool method_rejects(const MethodSpec& method, const Dataset& x, const Dataset* y,
                    NullCache* cache, std::uint64_t observation, int threads) {
  if (method.id == "cramp") {
    CrampConfig cfg = method.cramp;
    cfg.threads = threads;
    const CrampOutcome out = y ? cramp_test(x, *y, cfg, cache, observation)
                               : cramp_test(x, cfg, cache, observation);
    return out.reject;
  }
  MonteCarloOptions mc;
  mc.replicates = method.mc_replicates;
  mc.seed = splitmix64(method.cramp.seed + observation);
  mc.threads = threads;
  return direct_test(method.id, x, y, method.strategy, mc).p_value <= method.alpha;
}

StudyRow run_cell(const StudyCell& cell, std::uint64_t cell_index,
                  const StudyOptions& options) {
  const ScenarioSpec& s = cell.scenario;
  StudyRow row;
  row.label = cell.label;
  row.n = s.n;
  row.m = s.two_sample ? s.m : 0;
  row.p = s.p;
  row.method = method_label(cell.method);
  row.cov_model = to_string(s.cov);
  row.replicates = s.replicates;
  if (cell.method.id == "cramp") {
    row.k = cell.method.cramp.k;
    row.projections = cell.method.cramp.projections;
  }
  const auto start = std::chrono::steady_clock::now();
  try {
    validate_cell(cell);
    RngStream cov_rng(s.seed, stream_index(StreamFamily::harness_cell, cell_index));
    const ScenarioCovariance cov = build_covariance(s, cov_rng);
    row.metric = is_null_scenario(cov, method_hypothesis(cell.method)) ? "size" : "power";

    const GaussianSampler g1(Vector::Zero(s.p), cov.sigma1);
    std::optional<GaussianSampler> g2;
    if (cov.sigma2) g2.emplace(Vector::Zero(s.p), *cov.sigma2);

    NullCache local_cache;
    NullCache* cache = options.cache ? options.cache : &local_cache;
    if (cell.method.id == "cramp") {
      // Warm the null distribution once, in parallel, before the replicates.
      CrampConfig cfg = cell.method.cramp;
      cfg.threads = options.threads;
      empirical_critical_value(SampleShape{s.n, row.m, s.p}, cfg, cache);
    }

    std::vector<char> rejected(static_cast<std::size_t>(s.replicates), 0);
    parallel_for(rejected.size(), options.threads, [&](std::size_t r) {
      RngStream rng(s.seed, stream_index(StreamFamily::harness_replicate, cell_index, r));
      auto draw = [&](const GaussianSampler& g, Eigen::Index n) {
        Matrix z = g.draw(n, rng);
        if (s.mean == MeanModel::uniform) {
          Vector mu(s.p);
          for (Eigen::Index j = 0; j < s.p; ++j) mu[j] = rng.uniform(-3.0, 3.0);
          z.rowwise() += mu.transpose();
        }
        return Dataset(std::move(z));
      };
      const Dataset x = draw(g1, s.n);
      if (g2) {
        const Dataset y = draw(*g2, s.m);
        rejected[r] = method_rejects(cell.method, x, &y, cache, r, 1);
      } else {
        rejected[r] = method_rejects(cell.method, x, nullptr, cache, r, 1);
      }
    });
    for (char c : rejected) row.rejections += c;
    row.value = double(row.rejections) / double(s.replicates);
  } catch (const std::exception& e) {
    row.value = NAN;
    row.error = e.what();
  }
  row.wall_seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  return row;
}

std::vector<StudyRow> run_study(const std::vector<StudyCell>& grid,
                                const StudyOptions& options) {
  std::vector<StudyRow> rows;
  rows.reserve(grid.size());
  for (std::size_t i = 0; i < grid.size(); ++i) {
    rows.push_back(run_cell(grid[i], i, options));
    if (options.on_row) options.on_row(rows.back());
  }
  return rows;
}

std::vector<StudyCell> parse_grid(std::istream& in) {
  KeyValues defaults;
  std::vector<KeyValues> sections;
  KeyValues* current = &defaults;
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (auto hash = line.find('#'); hash != std::string::npos) line.resize(hash);
    line = trim(line);
    if (line.empty()) continue;
    if (line == "[cell]") {
      sections.emplace_back();
      current = &sections.back();
      continue;
    }
    const auto eq = line.find('=');
    if (eq == std::string::npos) {
      fail(ErrorKind::config, "grid line " + std::to_string(line_no) + ": expected key = value");
    }
    current->emplace_back(trim(line.substr(0, eq)), trim(line.substr(eq + 1)));
  }
  if (sections.empty()) fail(ErrorKind::config, "grid has no [cell] sections");

  std::vector<StudyCell> cells;
  for (const auto& section : sections) {
    std::vector<std::pair<std::string, std::vector<std::string>>> lists;
    auto put = [&](const std::string& key, const std::string& value) {
      auto it = std::find_if(lists.begin(), lists.end(),
                             [&](const auto& e) { return e.first == key; });
      if (it == lists.end()) {
        lists.emplace_back(key, split_list(value));
      } else {
        it->second = split_list(value);
      }
    };
    for (const auto& [k, v] : defaults) put(k, v);
    for (const auto& [k, v] : section) put(k, v);
    KeyValues current_values;
    expand(lists, 0, current_values, cells);
  }
  return cells;
}

std::vector<StudyCell> load_grid(const std::string& path) {
  std::ifstream in(path);
  if (!in) fail(ErrorKind::io, "cannot open grid file '" + path + "'");
  return parse_grid(in);
}

std::string row_csv_header() {
  return "label,n,m,p,k,K,method,cov,metric,value,replicates,rejections,wall_seconds,error";
}

std::string row_csv_line(const StudyRow& r) {
  std::ostringstream os;
  os << csv_field(r.label) << ',' << r.n << ',' << r.m << ',' << r.p << ',' << r.k << ','
     << r.projections << ',' << csv_field(r.method) << ',' << r.cov_model << ','
     << r.metric << ',';
  if (std::isnan(r.value)) {
    os << "NA";
  } else {
    os << r.value;
  }
  os << ',' << r.replicates << ',' << r.rejections << ',' << r.wall_seconds << ','
     << csv_field(r.error);
  return os.str();
}

void write_rows_csv(std::ostream& out, const std::vector<StudyRow>& rows) {
  out << row_csv_header() << '\n';
  for (const auto& r : rows) out << row_csv_line(r) << '\n';
}

std::string rows_json(const std::vector<StudyRow>& rows) {
  nlohmann::json arr = nlohmann::json::array();
  for (const auto& r : rows) {
    nlohmann::json j = {
        {"label", r.label},         {"n", r.n},
        {"m", r.m},                 {"p", r.p},
        {"k", r.k},                 {"K", r.projections},
        {"method", r.method},       {"cov", r.cov_model},
        {"metric", r.metric},       {"replicates", r.replicates},
        {"rejections", r.rejections}, {"wall_seconds", r.wall_seconds},
    };
    j["value"] = std::isnan(r.value) ? nlohmann::json(nullptr) : nlohmann::json(r.value);
    if (!r.error.empty()) j["error"] = r.error;
    arr.push_back(std::move(j));
  }
  return nlohmann::json{{"schema_version", 1}, {"rows", arr}}.dump(2);
}

}  // namespace cramp
