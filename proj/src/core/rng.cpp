#include "cramp/rng.hpp"

#include <array>

namespace cramp {

std::uint64_t splitmix64(std::uint64_t x) noexcept {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

std::uint64_t stream_index(StreamFamily family, std::uint64_t outer,
                           std::uint64_t inner) {
  if (outer >= (1ULL << 32)) fail(ErrorKind::argument, "stream outer index too large");
  if (inner >= (1ULL << 24)) fail(ErrorKind::argument, "stream inner index too large");
  return (static_cast<std::uint64_t>(family) << 56) | (outer << 24) | inner;
}

namespace {

std::mt19937_64 seeded_engine(std::uint64_t seed, std::uint64_t index) {
  std::uint64_t state = splitmix64(seed) ^ splitmix64(~index);
  std::array<std::uint32_t, 8> words{};
  for (std::size_t i = 0; i < words.size(); i += 2) {
    state = splitmix64(state + index + i);
    words[i] = static_cast<std::uint32_t>(state);
    words[i + 1] = static_cast<std::uint32_t>(state >> 32);
  }
  std::seed_seq seq(words.begin(), words.end());
  return std::mt19937_64(seq);
}

}  // namespace

RngStream::RngStream(std::uint64_t seed, std::uint64_t index)
    : seed_(seed), index_(index), engine_(seeded_engine(seed, index)) {}

double RngStream::chi_square(double df) {
  std::chi_squared_distribution<double> dist(df);
  return dist(engine_);
}

double RngStream::gamma(double shape, double rate) {
  std::gamma_distribution<double> dist(shape, 1.0 / rate);
  return dist(engine_);
}

std::uint64_t RngStream::below(std::uint64_t bound) {
  std::uniform_int_distribution<std::uint64_t> dist(0, bound - 1);
  return dist(engine_);
}

Matrix RngStream::normal_matrix(Eigen::Index rows, Eigen::Index cols) {
  Matrix out(rows, cols);
  // Fill row by row so the draw order matches the natural reading order.
  for (Eigen::Index i = 0; i < rows; ++i) {
    for (Eigen::Index j = 0; j < cols; ++j) out(i, j) = normal();
  }
  return out;
}

}  // namespace cramp
