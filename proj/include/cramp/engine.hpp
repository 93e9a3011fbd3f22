#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <map>
#include <mutex>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "cramp/linalg.hpp"
#include "cramp/rng.hpp"

namespace cramp {

enum class BaseTest { lrt_identity, lrt_sphericity, john, nagao, lw, box_m, wald };
enum class Hypothesis { one_sample_identity, one_sample_sphericity, two_sample };

const char* to_string(BaseTest b) noexcept;
const char* to_string(Hypothesis h) noexcept;
BaseTest parse_base_test(const std::string& id);
Hypothesis parse_hypothesis(const std::string& id);
/// The hypothesis a base test belongs to.
Hypothesis hypothesis_of(BaseTest b) noexcept;

/// How null replicates project their simulated data.
enum class NullSampling {
  /// Exact-in-law sampling of X R^T through ProjectedSampler.
  reduced,
  /// Explicit k x p projection matrices.
  explicit_matrices,
  /// Fresh data for every projection (the literal simulation loop). Projected
  /// data is then N(0, I_k) and is drawn directly.
  fresh_data_per_projection,
};

struct CrampConfig {
  int k = 5;             // projected dimension
  int projections = 100; // K
  int null_reps = 1000;  // N_null
  double alpha = 0.05;
  std::uint64_t seed = 20240601;
  BaseTest base = BaseTest::lrt_identity;
  Hypothesis hypothesis = Hypothesis::one_sample_identity;
  int threads = 0;  // 0: default_thread_count()
  NullSampling null_sampling = NullSampling::reduced;
  bool keep_null_sample = false;
};

/// Throws config errors for K < 1, N_null < 100, alpha outside (0, 1], or a
/// base test that does not belong to the hypothesis.
void validate(const CrampConfig& cfg);

struct SampleShape {
  Eigen::Index n = 0;
  Eigen::Index m = 0;  // 0 for one-sample
  Eigen::Index p = 0;
};

struct CrampOutcome {
  double mean_p = 1.0;
  std::vector<double> per_projection_p;
  double critical_value = 0.0;
  bool reject = false;
  std::optional<std::vector<double>> null_sample;
};

struct NullDistribution {
  double critical_value = 0.0;
  std::vector<double> sample;  // N_null mean p-values, replicate order
};

/// p-value of the base test applied to already projected data.
double base_pvalue(BaseTest base, const Dataset& projected);
double base_pvalue(BaseTest base, const Dataset& x, const Dataset& y);

/// Empirical alpha-quantile (lower tail): the ceil(alpha N)-th order statistic.
double lower_quantile(std::vector<double> sample, double alpha);

/// Generator of one null replicate's data (one or two groups).
using NullGenerator =
    std::function<std::pair<Matrix, Matrix>(const SampleShape&, RngStream&)>;

/// Standard normal data with identity covariance.
std::pair<Matrix, Matrix> standard_null_data(const SampleShape& shape,
                                             RngStream& rng);

/// Null distribution cache keyed on the full config tuple. Lookups hit memory
/// first, then `directory` when set. Unreadable or corrupt files are ignored
/// and regenerated.
class NullCache {
 public:
  NullCache() = default;
  explicit NullCache(std::filesystem::path directory);

  static std::string key(const SampleShape& shape, const CrampConfig& cfg);

  std::optional<std::vector<double>> find(const std::string& key);
  void store(const std::string& key, const std::vector<double>& sample);

  const std::optional<std::filesystem::path>& directory() const noexcept {
    return directory_;
  }

 private:
  std::filesystem::path file_for(const std::string& key) const;

  std::mutex mutex_;
  std::map<std::string, std::vector<double>> memory_;
  std::optional<std::filesystem::path> directory_;
};

/// Per-projection p-values for the observed data. Projection i is drawn from
/// stream (seed, observed_projection, observation, i); the same R_i projects
/// both groups in the two-sample case.
std::vector<double> projected_pvalues(const Dataset& data,
                                      const CrampConfig& cfg,
                                      std::uint64_t observation = 0);
std::vector<double> projected_pvalues(const Dataset& x, const Dataset& y,
                                      const CrampConfig& cfg,
                                      std::uint64_t observation = 0);

/// Mean p-value of one null replicate.
double null_replicate_mean(const SampleShape& shape, const CrampConfig& cfg,
                           std::uint64_t replicate,
                           const NullGenerator& generator = standard_null_data);

/// Simulates N_null null replicates and returns the lower alpha-quantile of
/// their mean p-values.
NullDistribution empirical_critical_value(
    const SampleShape& shape, const CrampConfig& cfg,
    NullCache* cache = nullptr,
    const NullGenerator& generator = standard_null_data);

CrampOutcome cramp_test(const Dataset& data, const CrampConfig& cfg,
                        NullCache* cache = nullptr,
                        std::uint64_t observation = 0);
CrampOutcome cramp_test(const Dataset& x, const Dataset& y,
                        const CrampConfig& cfg, NullCache* cache = nullptr,
                        std::uint64_t observation = 0);

}  // namespace cramp
