#pragma once

#include <cstdint>
#include <random>

#include "cramp/linalg.hpp"

namespace cramp {

// Stream indices are partitioned into families by the top byte so the
// observed-data projections, the null datasets and the harness replicates
// can never share a substream.
enum class StreamFamily : std::uint64_t {
  observed_projection = 1,
  null_replicate = 2,
  harness_replicate = 3,
  harness_cell = 4,
  workflow = 5,
  calibration = 6,
};

/// Builds a stream index from a family, an outer index (< 2^32) and an inner
/// index (< 2^24).
std::uint64_t stream_index(StreamFamily family, std::uint64_t outer,
                           std::uint64_t inner = 0);

/// Deterministic random stream. Equal (seed, index) pairs reproduce the same
/// draws; distinct indices are seeded through splitmix64 mixing.
class RngStream {
 public:
  RngStream(std::uint64_t seed, std::uint64_t index);

  std::uint64_t seed() const noexcept { return seed_; }
  std::uint64_t index() const noexcept { return index_; }

  double normal() { return normal_(engine_); }
  double uniform() { return uniform_(engine_); }
  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }
  double chi_square(double df);
  /// Gamma with shape-rate parameterisation (mean shape / rate).
  double gamma(double shape, double rate);
  std::uint64_t next_u64() { return engine_(); }
  /// Uniform integer in [0, bound).
  std::uint64_t below(std::uint64_t bound);

  Matrix normal_matrix(Eigen::Index rows, Eigen::Index cols);

  std::mt19937_64& engine() noexcept { return engine_; }

 private:
  std::uint64_t seed_;
  std::uint64_t index_;
  std::mt19937_64 engine_;
  std::normal_distribution<double> normal_{0.0, 1.0};
  std::uniform_real_distribution<double> uniform_{0.0, 1.0};
};

std::uint64_t splitmix64(std::uint64_t x) noexcept;

}  // namespace cramp
