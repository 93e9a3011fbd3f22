#include "cramp/classical.hpp"

#include <cmath>
#include <sstream>

#include "cramp/special.hpp"

namespace cramp {
namespace {

int half_vec_dim(Eigen::Index p) { return static_cast<int>(p * (p + 1) / 2); }

TestResult chi_square_result(const char* method, double statistic, double raw,
                             int df) {
  TestResult r;
  r.method = method;
  r.statistic = statistic;
  r.raw = raw;
  r.reference = RefDistribution::chi_square(df);
  r.p_value = chi2_upper_pvalue(statistic, df);
  r.strategy = Strategy::asymptotic;
  return r;
}

void require_full_rank_regime(Eigen::Index p, Eigen::Index n, const char* what) {
  if (p >= n - 1) {
    std::ostringstream os;
    os << what << " needs p < n - 1 (p=" << p << ", n=" << n << ")";
    fail(ErrorKind::rank_deficient, os.str());
  }
}

}  // namespace

const char* to_string(Strategy s) noexcept {
  return s == Strategy::asymptotic ? "asymptotic" : "monte-carlo";
}

double chi2_upper_pvalue(double statistic, int df) {
  if (std::isnan(statistic)) return NAN;
  if (statistic <= 0.0) return 1.0;
  return chi2_sf(statistic, df);
}

TestResult lrt_identity(const Dataset& data) {
  require_full_rank_regime(data.p(), data.n(), "identity LRT");
  return lrt_identity(sample_covariance(data), data.n());
}

TestResult lrt_identity(const CovMatrix& s, Eigen::Index n) {
  const Eigen::Index p = s.p();
  require_full_rank_regime(p, n, "identity LRT");
  const double dn = double(n);
  const double dp = double(p);
  const double bracket = -log_det_pd(s.values()) + s.values().trace() - dp;
  const double bartlett =
      (dn - 1.0) * (1.0 - (2.0 * dp + 1.0 - 2.0 / (dp + 1.0)) / (6.0 * dn - 7.0));
  const double stat = bartlett * std::max(bracket, 0.0);
  return chi_square_result("lrt-identity", stat, bracket, half_vec_dim(p));
}

TestResult lrt_sphericity(const Dataset& data) {
  require_full_rank_regime(data.p(), data.n(), "sphericity LRT");
  return lrt_sphericity(sample_covariance(data), data.n());
}

TestResult lrt_sphericity(const CovMatrix& s, Eigen::Index n) {
  const Eigen::Index p = s.p();
  if (p < 2) fail(ErrorKind::dimension, "sphericity LRT needs p >= 2");
  require_full_rank_regime(p, n, "sphericity LRT");
  const std::vector<double> lambda = eigenvalues_sym(s);
  double log_sum = 0.0;
  double sum = 0.0;
  for (double l : lambda) {
    if (!(l > 0.0)) {
      fail(ErrorKind::rank_deficient,
           "sphericity LRT needs positive sample eigenvalues");
    }
    log_sum += std::log(l);
    sum += l;
  }
  const double dp = double(p);
  const double bracket = dp * std::log(dp) + log_sum - dp * std::log(sum);
  const double factor = double(n) - 1.0 - (2.0 * dp * dp + dp + 2.0) / (6.0 * dp);
  const double stat = -factor * std::min(bracket, 0.0);
  return chi_square_result("lrt-sphericity", stat, bracket, half_vec_dim(p) - 1);
}

TestResult john_sphericity(const Dataset& data, bool scale_for_asymptotics) {
  return john_sphericity(sample_covariance(data), data.n(),
                         scale_for_asymptotics);
}

TestResult john_sphericity(const CovMatrix& s, Eigen::Index n,
                           bool scale_for_asymptotics) {
  const Eigen::Index p = s.p();
  if (p < 2) fail(ErrorKind::dimension, "John's test needs p >= 2");
  const double tr = s.values().trace();
  if (!(tr > 0.0)) fail(ErrorKind::degenerate_input, "John's test needs tr S > 0");
  const double dp = double(p);
  const Matrix centred = s.values() * (dp / tr) - Matrix::Identity(p, p);
  const double u = centred.squaredNorm() / dp;
  const double stat = scale_for_asymptotics ? double(n) * dp * u / 2.0 : u;
  return chi_square_result("john", stat, u, half_vec_dim(p) - 1);
}

TestResult nagao_identity(const Dataset& data, bool scale_for_asymptotics) {
  return nagao_identity(sample_covariance(data), data.n(),
                        scale_for_asymptotics);
}

TestResult nagao_identity(const CovMatrix& s, Eigen::Index n,
                          bool scale_for_asymptotics) {
  const Eigen::Index p = s.p();
  const double dp = double(p);
  const double v = (s.values() - Matrix::Identity(p, p)).squaredNorm() / dp;
  const double stat = scale_for_asymptotics ? double(n) * dp * v / 2.0 : v;
  return chi_square_result("nagao", stat, v, half_vec_dim(p));
}

TwoSampleCovs two_sample_covs(const Dataset& x, const Dataset& y) {
  if (x.p() != y.p()) {
    std::ostringstream os;
    os << "groups have different dimensions (" << x.p() << " vs " << y.p() << ")";
    fail(ErrorKind::dimension, os.str());
  }
  return two_sample_covs(sample_covariance(x), x.n(), sample_covariance(y),
                         y.n());
}

TwoSampleCovs two_sample_covs(CovMatrix s1, Eigen::Index n, CovMatrix s2,
                              Eigen::Index m) {
  if (s1.p() != s2.p()) fail(ErrorKind::dimension, "group covariances differ in size");
  const double dn = double(n);
  const double dm = double(m);
  CovMatrix pooled((dn * s1.values() + dm * s2.values()) / (dn + dm));
  return TwoSampleCovs{std::move(s1), std::move(s2), std::move(pooled), n, m};
}

TestResult box_m(const Dataset& x, const Dataset& y) {
  const Eigen::Index p = x.p();
  if (p >= std::min(x.n(), y.n()) - 1) {
    fail(ErrorKind::rank_deficient, "Box's M needs p < min(n, m) - 1");
  }
  return box_m(two_sample_covs(x, y));
}

TestResult box_m(const TwoSampleCovs& c) {
  const Eigen::Index p = c.s1.p();
  if (p >= std::min(c.n, c.m) - 1) {
    fail(ErrorKind::rank_deficient, "Box's M needs p < min(n, m) - 1");
  }
  const double dn = double(c.n);
  const double dm = double(c.m);
  const double dp = double(p);
  const double log_m = (dn - 1.0) * log_det_pd(c.s1.values()) +
                       (dm - 1.0) * log_det_pd(c.s2.values()) -
                       (dn + dm - 2.0) * log_det_pd(c.pooled.values());
  const double c1 = (1.0 / dn + 1.0 / dm - 1.0 / (dn + dm)) *
                    (2.0 * dp * dp + 3.0 * dp - 1.0) / (6.0 * (dp + 1.0));
  // The determinant ratio carries full (n - 1) exponents, so -log M is already
  // on the -2 log(likelihood ratio) scale.
  const double stat = -(1.0 - c1) * log_m;
  return chi_square_result("box-m", stat, log_m, half_vec_dim(p));
}

TestResult wald_two_sample(const Dataset& x, const Dataset& y) {
  return wald_two_sample(two_sample_covs(x, y));
}

TestResult wald_two_sample(const TwoSampleCovs& c) {
  const Eigen::Index p = c.s1.p();
  Eigen::LLT<Matrix> llt(c.pooled.values());
  if (llt.info() != Eigen::Success || c.n + c.m <= p) {
    fail(ErrorKind::rank_deficient, "Wald test needs a nonsingular pooled covariance");
  }
  const Matrix b1 = llt.solve(c.s1.values());  // S_pl^-1 S_1
  const Matrix b2 = llt.solve(c.s2.values());
  const double dn = double(c.n);
  const double dm = double(c.m);
  const double big_n = dn + dm;
  const double t11 = (b1 * b1).trace();
  const double t22 = (b2 * b2).trace();
  const double t12 = (b1 * b2).trace();
  const double stat = big_n / 2.0 *
                      (dn / big_n * t11 + dm / big_n * t22 -
                       dn * dm / (big_n * big_n) * t12);
  return chi_square_result("wald", stat, stat, half_vec_dim(p));
}

}  // namespace cramp
