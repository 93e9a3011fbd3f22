#pragma once

#include <string>

#include "cramp/linalg.hpp"

namespace cramp {

enum class Strategy { asymptotic, monte_carlo };

const char* to_string(Strategy s) noexcept;

struct TestResult {
  /// Value compared against `reference`.
  double statistic = 0.0;
  /// The unscaled functional (equal to `statistic` unless a scaling applies).
  double raw = 0.0;
  RefDistribution reference;
  double p_value = 1.0;
  Strategy strategy = Strategy::asymptotic;
  std::string method;
};

/// Upper-tail chi-square p-value that maps non-positive statistics to 1.
double chi2_upper_pvalue(double statistic, int df);

// One-sample tests. The covariance overloads take S (divisor n) and the
// sample size, so projected covariances can be tested without rebuilding a
// Dataset.

TestResult lrt_identity(const Dataset& data);
TestResult lrt_identity(const CovMatrix& s, Eigen::Index n);

TestResult lrt_sphericity(const Dataset& data);
TestResult lrt_sphericity(const CovMatrix& s, Eigen::Index n);

/// U = p^-1 tr(S / (tr S / p) - I)^2. With scale_for_asymptotics the
/// chi-square comparison uses n p U / 2 on p(p+1)/2 - 1 df.
TestResult john_sphericity(const Dataset& data, bool scale_for_asymptotics);
TestResult john_sphericity(const CovMatrix& s, Eigen::Index n,
                           bool scale_for_asymptotics);

/// V = p^-1 tr(S - I)^2. With scale_for_asymptotics the chi-square comparison
/// uses n p V / 2 on p(p+1)/2 df.
TestResult nagao_identity(const Dataset& data, bool scale_for_asymptotics);
TestResult nagao_identity(const CovMatrix& s, Eigen::Index n,
                          bool scale_for_asymptotics);

// Two-sample tests.

struct TwoSampleCovs {
  CovMatrix s1;
  CovMatrix s2;
  CovMatrix pooled;  // (n S1 + m S2) / (n + m)
  Eigen::Index n;
  Eigen::Index m;
};

TwoSampleCovs two_sample_covs(const Dataset& x, const Dataset& y);
TwoSampleCovs two_sample_covs(CovMatrix s1, Eigen::Index n, CovMatrix s2,
                              Eigen::Index m);

TestResult box_m(const Dataset& x, const Dataset& y);
TestResult box_m(const TwoSampleCovs& covs);

TestResult wald_two_sample(const Dataset& x, const Dataset& y);
TestResult wald_two_sample(const TwoSampleCovs& covs);

}  // namespace cramp
