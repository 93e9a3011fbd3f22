#pragma once

#include <cstdint>
#include <functional>
#include <vector>

#include "cramp/classical.hpp"
#include "cramp/rng.hpp"

namespace cramp {

/// Pairwise inner products of the observations with their row sums. Shared by
/// every U-statistic so the O(n^2 p) product is formed once per dataset.
class UStatCache {
 public:
  /// `centered` subtracts the sample mean first. The U-statistics below are
  /// location invariant, so this only affects rounding.
  explicit UStatCache(const Dataset& data, bool centered = true);

  const Matrix& gram() const noexcept { return gram_; }
  const Matrix& rows() const noexcept { return rows_; }
  Eigen::Index n() const noexcept { return gram_.rows(); }

 private:
  Matrix rows_;
  Matrix gram_;
};

struct TraceEstimates {
  double t1;  // unbiased for tr(Sigma)
  double t2;  // unbiased for tr(Sigma^2)
};

/// U-statistic estimators of tr(Sigma) and tr(Sigma^2) in O(n^2) from the
/// cached Gram matrix.
TraceEstimates czz_trace_estimators(const UStatCache& cache);
TraceEstimates czz_trace_estimators(const Dataset& data);

/// Unbiased estimator of tr(Sigma_1 Sigma_2) from two groups.
double cross_trace_estimator(const UStatCache& x, const UStatCache& y);

struct OneSamplePair {
  TestResult sphericity;  // U statistic
  TestResult identity;    // V statistic
};

TestResult lw_identity(const Dataset& data, bool scale_for_asymptotics = true);
TestResult lw_identity(const CovMatrix& s, Eigen::Index n,
                       bool scale_for_asymptotics = true);

/// a2-hat of the Srivastava-Yanagihara-Kubokawa family, as printed.
double syk_a2(const CovMatrix& s, Eigen::Index n);

OneSamplePair syk_one_sample(const Dataset& data);
OneSamplePair czz_one_sample(const Dataset& data);

struct MonteCarloOptions {
  int replicates = 200;
  std::uint64_t seed = 0x5eed;
  int threads = 1;
};

/// Delta_k term of the two-sample SYK statistic.
double syk_delta(const CovMatrix& s, Eigen::Index n);

TestResult schott_two_sample(const Dataset& x, const Dataset& y,
                             Strategy strategy,
                             const MonteCarloOptions& mc = {});
TestResult syk_two_sample(const Dataset& x, const Dataset& y,
                          Strategy strategy = Strategy::asymptotic,
                          const MonteCarloOptions& mc = {});

struct LiChenTerms {
  double a1;
  double a2;
  double c;
};
LiChenTerms li_chen_terms(const Dataset& x, const Dataset& y);

TestResult li_chen_two_sample(const Dataset& x, const Dataset& y,
                              Strategy strategy = Strategy::asymptotic,
                              const MonteCarloOptions& mc = {});

/// Raw max statistic.
double clx_statistic(const Dataset& x, const Dataset& y);

/// `analytic` compares T - 4 log p + log log p with the type-I extreme value
/// law; `monte_carlo` calibrates by permutation.
TestResult clx_two_sample(const Dataset& x, const Dataset& y,
                          Strategy strategy,
                          const MonteCarloOptions& mc = {});

/// Permutation calibration: reassigns the rows of the stacked, group-centered
/// data to groups of the original sizes and returns (1 + #{T_b >= T}) / (B + 1).
using TwoSampleStatistic =
    std::function<double(const Dataset&, const Dataset&)>;
double pooled_permutation_pvalue(const Dataset& x, const Dataset& y,
                                 double observed, const TwoSampleStatistic& stat,
                                 const MonteCarloOptions& mc,
                                 std::vector<double>* null_sample = nullptr);

}  // namespace cramp
