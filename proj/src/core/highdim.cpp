#include "cramp/highdim.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <numbers>
#include <sstream>

#include "cramp/parallel.hpp"
#include "cramp/special.hpp"

namespace cramp {
namespace {

void require_min_samples(Eigen::Index n, Eigen::Index min, const char* what) {
  if (n < min) {
    std::ostringstream os;
    os << what << " needs at least " << min << " observations (got " << n << ")";
    fail(ErrorKind::sample_size, os.str());
  }
}

TestResult normal_result(const char* method, double statistic, double raw) {
  TestResult r;
  r.method = method;
  r.statistic = statistic;
  r.raw = raw;
  r.reference = RefDistribution::standard_normal();
  r.p_value = normal_sf(statistic);
  r.strategy = Strategy::asymptotic;
  return r;
}

// Pieces of the second-order U-statistic computed from a Gram matrix:
// Q = sum_{i!=j} K_ij^2, R = sum_i (sum_{j!=i} K_ij)^2, T = sum_{i!=j} K_ij.
double second_order_u(const Matrix& gram) {
  const Eigen::Index n = gram.rows();
  const double dn = double(n);
  double q = 0.0;
  double r = 0.0;
  double t = 0.0;
  for (Eigen::Index i = 0; i < n; ++i) {
    double row = 0.0;
    for (Eigen::Index j = 0; j < n; ++j) {
      if (i == j) continue;
      const double v = gram(i, j);
      row += v;
      q += v * v;
    }
    r += row * row;
    t += row;
  }
  const double paths = r - q;                      // i-j-k chains
  const double disjoint = t * t - 4.0 * r + 2.0 * q;  // (i,j),(k,l) all distinct
  return q / (dn * (dn - 1.0)) -
         2.0 * paths / (dn * (dn - 1.0) * (dn - 2.0)) +
         disjoint / (dn * (dn - 1.0) * (dn - 2.0) * (dn - 3.0));
}

struct GramTraces {
  double tr1;    // tr S_1
  double tr2;    // tr S_2
  double tr11;   // tr S_1^2
  double tr22;   // tr S_2^2
  double tr12;   // tr S_1 S_2
};

// Traces of the n-divisor covariances through n x n products, which is the
// cheap route when p is large.
GramTraces gram_traces(const Matrix& xc, const Matrix& yc) {
  const double n = double(xc.rows());
  const double m = double(yc.rows());
  const Matrix kxx = xc * xc.transpose();
  const Matrix kyy = yc * yc.transpose();
  const Matrix kxy = xc * yc.transpose();
  return GramTraces{kxx.trace() / n, kyy.trace() / m, kxx.squaredNorm() / (n * n),
                    kyy.squaredNorm() / (m * m), kxy.squaredNorm() / (n * m)};
}

void require_same_dim(const Dataset& x, const Dataset& y) {
  if (x.p() != y.p()) {
    std::ostringstream os;
    os << "groups have different dimensions (" << x.p() << " vs " << y.p() << ")";
    fail(ErrorKind::dimension, os.str());
  }
}

double schott_raw(const Dataset& x, const Dataset& y, double* pooled_tr2) {
  const GramTraces g = gram_traces(x.centered(), y.centered());
  const double n = double(x.n());
  const double m = double(y.n());
  const double diff = g.tr11 + g.tr22 - 2.0 * g.tr12;
  const double corr1 = (n - 2.0) / ((n + 1.0) * (n - 1.0)) *
                       ((n - 1.0) * (n - 3.0) * g.tr11 + (n - 1.0) * g.tr1 * g.tr1);
  const double corr2 =
      (m - 2.0) / ((m + 1.0) * (m - 1.0)) *
      ((m - 1.0) * (m - 3.0) * g.tr22 + (m - 1.0) * (m - 1.0) * g.tr2 * g.tr2);
  if (pooled_tr2) {
    *pooled_tr2 = (n * n * g.tr11 + m * m * g.tr22 + 2.0 * n * m * g.tr12) /
                  ((n + m) * (n + m));
  }
  return diff - corr1 - corr2;
}

double syk_two_raw(const Dataset& x, const Dataset& y) {
  const CovMatrix s1 = sample_covariance(x);
  const CovMatrix s2 = sample_covariance(y);
  const double n = double(x.n());
  const double m = double(y.n());
  const double p = double(x.p());
  const double d1 = syk_delta(s1, x.n());
  const double d2 = syk_delta(s2, y.n());
  const double cross = s1.values().cwiseProduct(s2.values()).sum();
  const double num = d1 + d2 - 2.0 * cross / p;
  const double den = 2.0 * (1.0 / (n - 1.0) + 1.0 / (m - 1.0)) *
                     ((n - 1.0) * d1 + (m - 1.0) * d2) / (n + m - 2.0);
  if (!(den != 0.0) || std::isnan(den)) {
    fail(ErrorKind::degenerate_input, "SYK two-sample denominator is zero");
  }
  return num / den;
}

double li_chen_raw(const Dataset& x, const Dataset& y) {
  const LiChenTerms t = li_chen_terms(x, y);
  const double sigma = 2.0 * (t.a1 / double(x.n()) + t.a2 / double(y.n()));
  if (!(sigma > 0.0)) {
    fail(ErrorKind::degenerate_input, "Li-Chen variance estimate is not positive");
  }
  return (t.a1 + t.a2 - 2.0 * t.c) / sigma;
}

TestResult monte_carlo_result(const char* method, double raw,
                              const Dataset& x, const Dataset& y,
                              const TwoSampleStatistic& stat,
                              const MonteCarloOptions& mc) {
  std::vector<double> null_sample;
  TestResult r;
  r.method = method;
  r.statistic = raw;
  r.raw = raw;
  r.p_value = pooled_permutation_pvalue(x, y, raw, stat, mc, &null_sample);
  r.reference = RefDistribution::empirical(std::move(null_sample));
  r.strategy = Strategy::monte_carlo;
  return r;
}

}  // namespace

UStatCache::UStatCache(const Dataset& data, bool centered)
    : rows_(centered ? data.centered() : data.values()),
      gram_(rows_ * rows_.transpose()) {}

TraceEstimates czz_trace_estimators(const UStatCache& cache) {
  const Eigen::Index n = cache.n();
  require_min_samples(n, 4, "trace U-statistics");
  const Matrix& k = cache.gram();
  const double dn = double(n);
  const double diag = k.trace();
  const double off = k.sum() - diag;
  return TraceEstimates{diag / dn - off / (dn * (dn - 1.0)), second_order_u(k)};
}

TraceEstimates czz_trace_estimators(const Dataset& data) {
  return czz_trace_estimators(UStatCache(data));
}

double cross_trace_estimator(const UStatCache& x, const UStatCache& y) {
  require_min_samples(x.n(), 2, "cross trace estimator");
  require_min_samples(y.n(), 2, "cross trace estimator");
  if (x.rows().cols() != y.rows().cols()) {
    fail(ErrorKind::dimension, "groups have different dimensions");
  }
  const Matrix cross = x.rows() * y.rows().transpose();
  const double n = double(cross.rows());
  const double m = double(cross.cols());
  const double sq = cross.squaredNorm();
  const double row_sq = cross.rowwise().sum().squaredNorm();
  const double col_sq = cross.colwise().sum().squaredNorm();
  const double total = cross.sum();
  const double t1 = sq / (n * m);
  const double t2 = (col_sq - sq) / (n * (n - 1.0) * m);
  const double t3 = (row_sq - sq) / (m * (m - 1.0) * n);
  const double t4 = (total * total - row_sq - col_sq + sq) /
                    (n * (n - 1.0) * m * (m - 1.0));
  return t1 - t2 - t3 + t4;
}

TestResult lw_identity(const Dataset& data, bool scale_for_asymptotics) {
  return lw_identity(sample_covariance(data), data.n(), scale_for_asymptotics);
}

TestResult lw_identity(const CovMatrix& s, Eigen::Index n,
                       bool scale_for_asymptotics) {
  const Eigen::Index p = s.p();
  const double dp = double(p);
  const double dn = double(n);
  const double tr = s.values().trace() / dp;
  const double v = (s.values() - Matrix::Identity(p, p)).squaredNorm() / dp -
                   dp / dn * tr * tr + dp / dn;
  const double stat = scale_for_asymptotics ? dn * dp * v / 2.0 : v;
  TestResult r;
  r.method = "lw";
  r.statistic = stat;
  r.raw = v;
  const int df = static_cast<int>(p * (p + 1) / 2);
  r.reference = RefDistribution::chi_square(df);
  r.p_value = chi2_upper_pvalue(stat, df);
  return r;
}

double syk_a2(const CovMatrix& s, Eigen::Index n) {
  const double dn = double(n);
  const double dp = double(s.p());
  const double tr_s2 = s.values().squaredNorm();
  const double tr_d2 = s.values().diagonal().squaredNorm();
  const double c = (dn - 1.0) * (dn - 1.0) * (dn - 1.0);
  return (c * (dn - 2.0) * tr_s2 - dn * c * tr_d2 + (dn - 1.0) * (dn - 1.0) * tr_s2) /
         (dp * dn * (dn - 1.0) * (dn - 2.0) * (dn - 3.0));
}

double syk_delta(const CovMatrix& s, Eigen::Index n) {
  const double dn = double(n);
  const double dp = double(s.p());
  const double tr = s.values().trace();
  const double tr_s2 = s.values().squaredNorm();
  const double tr_d2 = s.values().diagonal().squaredNorm();
  const double c = (dn - 1.0) * (dn - 1.0) * (dn - 1.0);
  return (c * (dn - 2.0) * tr_s2 - dn * c * tr_d2 + (dn - 1.0) * (dn - 1.0) * tr * tr) /
         (dp * dn * (dn - 1.0) * (dn - 2.0) * (dn - 3.0));
}

OneSamplePair syk_one_sample(const Dataset& data) {
  require_min_samples(data.n(), 4, "SYK one-sample test");
  const CovMatrix s = sample_covariance(data);
  const double a1 = s.values().trace() / double(s.p());
  if (!(a1 != 0.0)) fail(ErrorKind::degenerate_input, "SYK test needs tr S != 0");
  const double a2 = syk_a2(s, data.n());
  const double half = (double(data.n()) - 1.0) / 2.0;
  const double u = half * (a2 / a1 - 1.0);
  const double v = half * (a2 - 2.0 * a1 + 1.0);
  return OneSamplePair{normal_result("syk-u", u, u), normal_result("syk-v", v, v)};
}

OneSamplePair czz_one_sample(const Dataset& data) {
  require_min_samples(data.n(), 4, "CZZ one-sample test");
  const TraceEstimates t = czz_trace_estimators(data);
  if (!(std::fabs(t.t1) > 0.0)) {
    fail(ErrorKind::degenerate_input, "CZZ test needs a nonzero trace estimate");
  }
  const double p = double(data.p());
  const double n = double(data.n());
  const double u = p * t.t2 / (t.t1 * t.t1) - 1.0;
  const double v = t.t2 / p - 2.0 * t.t1 / p + 1.0;
  return OneSamplePair{normal_result("czz-u", n * u / 2.0, u),
                       normal_result("czz-v", n * v / 2.0, v)};
}

double pooled_permutation_pvalue(const Dataset& x, const Dataset& y,
                                 double observed, const TwoSampleStatistic& stat,
                                 const MonteCarloOptions& mc,
                                 std::vector<double>* null_sample) {
  require_same_dim(x, y);
  if (mc.replicates < 1) fail(ErrorKind::config, "monte-carlo calibration needs at least 1 replicate");
  const Eigen::Index n = x.n();
  const Eigen::Index m = y.n();
  Matrix pooled(n + m, x.p());
  pooled << x.centered(), y.centered();

  std::vector<double> values(static_cast<std::size_t>(mc.replicates));
  parallel_for(values.size(), mc.threads, [&](std::size_t b) {
    RngStream rng(mc.seed, stream_index(StreamFamily::calibration, b));
    std::vector<Eigen::Index> order(static_cast<std::size_t>(n + m));
    std::iota(order.begin(), order.end(), Eigen::Index{0});
    for (std::size_t i = order.size() - 1; i > 0; --i) {
      std::swap(order[i], order[rng.below(i + 1)]);
    }
    Matrix gx(n, x.p());
    Matrix gy(m, x.p());
    for (Eigen::Index i = 0; i < n; ++i) gx.row(i) = pooled.row(order[std::size_t(i)]);
    for (Eigen::Index i = 0; i < m; ++i) gy.row(i) = pooled.row(order[std::size_t(n + i)]);
    values[b] = stat(Dataset(std::move(gx)), Dataset(std::move(gy)));
  });
  std::size_t exceed = 0;
  for (double v : values) exceed += (v >= observed) ? 1 : 0;
  if (null_sample) *null_sample = values;
  return (1.0 + double(exceed)) / (double(values.size()) + 1.0);
}

TestResult schott_two_sample(const Dataset& x, const Dataset& y,
                             Strategy strategy, const MonteCarloOptions& mc) {
  require_same_dim(x, y);
  require_min_samples(x.n(), 4, "Schott test");
  require_min_samples(y.n(), 4, "Schott test");
  double pooled_tr2 = 0.0;
  const double raw = schott_raw(x, y, &pooled_tr2);
  if (strategy == Strategy::monte_carlo) {
    return monte_carlo_result(
        "schott", raw, x, y,
        [](const Dataset& a, const Dataset& b) { return schott_raw(a, b, nullptr); },
        mc);
  }
  const double sd =
      2.0 * (1.0 / double(x.n()) + 1.0 / double(y.n())) * pooled_tr2;
  if (!(sd > 0.0)) fail(ErrorKind::degenerate_input, "Schott variance is zero");
  return normal_result("schott", raw / sd, raw);
}

TestResult syk_two_sample(const Dataset& x, const Dataset& y, Strategy strategy,
                          const MonteCarloOptions& mc) {
  require_same_dim(x, y);
  require_min_samples(x.n(), 4, "SYK two-sample test");
  require_min_samples(y.n(), 4, "SYK two-sample test");
  const double raw = syk_two_raw(x, y);
  if (strategy == Strategy::monte_carlo) {
    return monte_carlo_result("syk2", raw, x, y, syk_two_raw, mc);
  }
  return normal_result("syk2", raw, raw);
}

LiChenTerms li_chen_terms(const Dataset& x, const Dataset& y) {
  require_same_dim(x, y);
  require_min_samples(x.n(), 4, "Li-Chen test");
  require_min_samples(y.n(), 4, "Li-Chen test");
  const UStatCache cx(x);
  const UStatCache cy(y);
  return LiChenTerms{second_order_u(cx.gram()), second_order_u(cy.gram()),
                     cross_trace_estimator(cx, cy)};
}

TestResult li_chen_two_sample(const Dataset& x, const Dataset& y,
                              Strategy strategy, const MonteCarloOptions& mc) {
  const double raw = li_chen_raw(x, y);
  if (strategy == Strategy::monte_carlo) {
    return monte_carlo_result("lc", raw, x, y, li_chen_raw, mc);
  }
  return normal_result("lc", raw, raw);
}

double clx_statistic(const Dataset& x, const Dataset& y) {
  require_same_dim(x, y);
  const Eigen::Index p = x.p();
  if (p < 2) fail(ErrorKind::dimension, "CLX test needs p >= 2");
  const Matrix xc = x.centered();
  const Matrix yc = y.centered();
  const double n = double(x.n());
  const double m = double(y.n());

  const Matrix s1 = xc.transpose() * xc / n;
  const Matrix s2 = yc.transpose() * yc / m;
  const Matrix x2 = xc.cwiseProduct(xc);
  const Matrix y2 = yc.cwiseProduct(yc);
  // omega_ij = n^-1 sum_k (x_ki x_kj)^2 - S_ij^2
  const Matrix w1 = x2.transpose() * x2 / n - s1.cwiseProduct(s1);
  const Matrix w2 = y2.transpose() * y2 / m - s2.cwiseProduct(s2);

  double best = 0.0;
  for (Eigen::Index j = 1; j < p; ++j) {
    for (Eigen::Index i = 0; i < j; ++i) {
      const double den = w1(i, j) / n + w2(i, j) / m;
      const double d = s1(i, j) - s2(i, j);
      if (!(den > 0.0)) {
        if (d == 0.0 && den == 0.0) {
          std::ostringstream os;
          os << "CLX variance estimate is zero at (" << i << ", " << j << ")";
          fail(ErrorKind::degenerate_input, os.str());
        }
        fail(ErrorKind::degenerate_input, "CLX variance estimate is not positive");
      }
      best = std::max(best, d * d / den);
    }
  }
  return best;
}

TestResult clx_two_sample(const Dataset& x, const Dataset& y,
                          Strategy strategy, const MonteCarloOptions& mc) {
  const double raw = clx_statistic(x, y);
  if (strategy == Strategy::monte_carlo) {
    return monte_carlo_result("clx", raw, x, y, clx_statistic, mc);
  }
  const double p = double(x.p());
  const double shifted = raw - 4.0 * std::log(p) + std::log(std::log(p));
  TestResult r;
  r.method = "clx";
  r.statistic = shifted;
  r.raw = raw;
  r.reference = RefDistribution::none();
  // Type-I extreme value law: P(T' <= t) = exp(-(8 pi)^-1/2 exp(-t / 2)).
  r.p_value = -std::expm1(-std::exp(-shifted / 2.0) /
                          std::sqrt(8.0 * std::numbers::pi));
  r.strategy = Strategy::asymptotic;
  return r;
}

}  // namespace cramp
