#pragma once

#include <cstdint>
#include <functional>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "cramp/classical.hpp"
#include "cramp/engine.hpp"
#include "cramp/highdim.hpp"

namespace cramp {

enum class CovModel {
  identity,
  sphere,           // sigma^2 I
  band,             // rho^|i-j| for |i-j| <= bandwidth
  tail_diag,        // 1 up to index bandwidth, 1 + eps after
  gamma_diag,       // 1 up to floor(fraction p), Gamma(4, rate 2) after
  band_congruence,  // S1 = diag U(1,3), S2 = S1^1/2 Omega S1^1/2
  shared_diag,      // S1 = S2 = diag U(0.5, 2)
  scaled,           // S1 = diag U(0.5, 2), S2 = scale * S1
};
enum class MeanModel { zero, uniform };

const char* to_string(CovModel c) noexcept;
CovModel parse_cov_model(const std::string& id);

struct ScenarioSpec {
  bool two_sample = false;
  Eigen::Index n = 20;
  Eigen::Index m = 0;
  Eigen::Index p = 100;
  CovModel cov = CovModel::identity;
  double sigma = 1.0;
  double rho = 0.5;
  double bandwidth = 10;  // band and tail-diag
  double fraction = 0.1;  // gamma-diag and band-congruence, as a share of p
  double eps = 0.5;
  double scale = 1.0;
  MeanModel mean = MeanModel::zero;
  int replicates = 200;
  std::uint64_t seed = 1;
};

/// Covariances of one scenario. sigma2 is only set for two-sample specs.
struct ScenarioCovariance {
  CovMatrix sigma1;
  std::optional<CovMatrix> sigma2;
};

/// Band-limited Toeplitz matrix rho^|i-j| 1{|i-j| <= width}.
Matrix band_matrix(Eigen::Index p, double rho, Eigen::Index width);

/// Throws invalid_scenario for bad parameters or a non-PD band.
ScenarioCovariance build_covariance(const ScenarioSpec& spec, RngStream& rng);

/// Cholesky-backed N(mean, cov) sampler; diagonal covariances skip the
/// factorization. Throws non_pd when cov is not positive definite.
class GaussianSampler {
 public:
  GaussianSampler(Vector mean, const CovMatrix& cov);

  Eigen::Index p() const noexcept { return mean_.size(); }
  Matrix draw(Eigen::Index n, RngStream& rng) const;

 private:
  Vector mean_;
  bool diagonal_ = false;
  Vector scale_;  // sqrt of the diagonal
  Matrix lower_;  // Cholesky factor when dense
};

Dataset sample_gaussian(const Vector& mean, const CovMatrix& cov, Eigen::Index n,
                        RngStream& rng);

/// One method column of a study. `id` is "cramp" or a direct statistic id:
/// lrt-identity, lrt-sphericity, john, nagao, lw, syk-u, syk-v, czz-u, czz-v,
/// box-m, wald, schott, syk2, lc, clx.
struct MethodSpec {
  std::string id = "cramp";
  CrampConfig cramp;  // used when id == "cramp"
  Strategy strategy = Strategy::asymptotic;
  int mc_replicates = 200;
  double alpha = 0.05;
};

std::string method_label(const MethodSpec& m);
Hypothesis method_hypothesis(const MethodSpec& m);

struct StudyCell {
  std::string label;
  ScenarioSpec scenario;
  MethodSpec method;
};

struct StudyRow {
  std::string label;
  Eigen::Index n = 0;
  Eigen::Index m = 0;
  Eigen::Index p = 0;
  int k = 0;
  int projections = 0;
  std::string method;
  std::string cov_model;
  std::string metric;  // size or power
  double value = 0.0;  // NaN when the cell failed
  int replicates = 0;
  int rejections = 0;
  double wall_seconds = 0.0;
  std::string error;
};

struct StudyOptions {
  int threads = 0;
  NullCache* cache = nullptr;
  /// Called once per finished cell, in grid order.
  std::function<void(const StudyRow&)> on_row;
};

/// Throws config errors for cells that cannot run (replicates < 1, group
/// layout inconsistent with the method, invalid cramp config).
void validate_cell(const StudyCell& cell);

/// True when the scenario's covariances satisfy the method's null.
bool is_null_scenario(const ScenarioCovariance& cov, Hypothesis h);

/// Runs a direct statistic by id. y is required for two-sample ids.
TestResult direct_test(const std::string& id, const Dataset& x, const Dataset* y,
                       Strategy strategy = Strategy::asymptotic,
                       const MonteCarloOptions& mc = {});

/// Reject/accept for one replicate dataset.
bool method_rejects(const MethodSpec& method, const Dataset& x, const Dataset* y,
                    NullCache* cache, std::uint64_t observation, int threads);

StudyRow run_cell(const StudyCell& cell, std::uint64_t cell_index,
                  const StudyOptions& options);
std::vector<StudyRow> run_study(const std::vector<StudyCell>& grid,
                                const StudyOptions& options);

/// Parses the key-value grid format. Lines are `key = value` with `#`
/// comments. Keys before the first `[cell]` set defaults; every `[cell]`
/// section expands comma lists into the Cartesian product of its values.
std::vector<StudyCell> parse_grid(std::istream& in);
std::vector<StudyCell> load_grid(const std::string& path);

void write_rows_csv(std::ostream& out, const std::vector<StudyRow>& rows);
std::string rows_json(const std::vector<StudyRow>& rows);
std::string row_csv_header();
std::string row_csv_line(const StudyRow& row);

}  // namespace cramp
