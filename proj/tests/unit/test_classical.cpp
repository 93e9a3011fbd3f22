#include <doctest.h>

#include <functional>
#include <random>

#include "cramp/classical.hpp"
#include "cramp/rng.hpp"
#include "cramp/special.hpp"
#include "oracles.hpp"

using namespace cramp;

namespace {

ErrorKind error_kind(const std::function<void()>& f) {
  try {
    f();
  } catch (const Error& e) {
    return e.kind();
  }
  return ErrorKind::io;  // not thrown
}

std::vector<double> null_pvalues(int reps, std::uint64_t seed,
                                 const std::function<double(RngStream&)>& one) {
  std::vector<double> out;
  for (int r = 0; r < reps; ++r) {
    RngStream rng(seed, r);
    out.push_back(one(rng));
  }
  return out;
}

double rejection_rate(const std::vector<double>& p, double alpha = 0.05) {
  int hits = 0;
  for (double v : p) hits += v <= alpha;
  return double(hits) / p.size();
}

Matrix rotation(Eigen::Index p, std::mt19937_64& g) {
  Eigen::HouseholderQR<Matrix> qr(oracle::gaussian(p, p, g));
  return qr.householderQ();
}

}  // namespace

TEST_CASE("lrt_identity") {
  const TestResult r = lrt_identity(CovMatrix::identity(4), 50);
  CHECK(std::fabs(r.statistic) < 1e-12);
  CHECK(r.p_value == doctest::Approx(1.0));
  CHECK(r.reference.kind == RefDistribution::Kind::chi_square);
  CHECK(r.reference.df == 10);
  CHECK(r.p_value == chi2_sf(r.statistic, r.reference.df));

  std::mt19937_64 g(1);
  CHECK(error_kind([&] { lrt_identity(Dataset(oracle::gaussian(5, 5, g))); }) ==
        ErrorKind::rank_deficient);

  const auto p = null_pvalues(2000, 21, [](RngStream& rng) {
    return lrt_identity(Dataset(rng.normal_matrix(100, 3))).p_value;
  });
  const double size = rejection_rate(p);
  CHECK(size >= 0.03);
  CHECK(size <= 0.08);
  CHECK(oracle::ks_uniform(p) < 0.05);
}

TEST_CASE("lrt_sphericity") {
  for (double c : {0.01, 1.0, 37.0}) {
    const Matrix s = c * Matrix::Identity(5, 5);
    CHECK(std::fabs(lrt_sphericity(CovMatrix(s), 40).statistic) < 1e-9);
  }
  Matrix sing = Matrix::Identity(3, 3);
  sing(2, 2) = 0.0;
  CHECK(error_kind([&] { lrt_sphericity(CovMatrix(sing), 40); }) == ErrorKind::rank_deficient);

  const auto p = null_pvalues(2000, 22, [](RngStream& rng) {
    return lrt_sphericity(Dataset(2.0 * rng.normal_matrix(100, 3))).p_value;
  });
  const double size = rejection_rate(p);
  CHECK(size >= 0.03);
  CHECK(size <= 0.08);
  CHECK(oracle::ks_uniform(p) < 0.05);
}

TEST_CASE("john_sphericity") {
  CHECK(john_sphericity(CovMatrix::identity(6), 30, false).statistic == doctest::Approx(0.0));
  Matrix d = Matrix::Zero(2, 2);
  d(0, 0) = 1;
  d(1, 1) = 3;
  CHECK(john_sphericity(CovMatrix(d), 30, false).statistic == doctest::Approx(0.25));
  CHECK(john_sphericity(CovMatrix(7.0 * d), 30, false).statistic == doctest::Approx(0.25));
  CHECK(error_kind([] { john_sphericity(CovMatrix(Matrix::Zero(3, 3)), 10, true); }) ==
        ErrorKind::degenerate_input);

  // invariance of the statistic under scaling of the data
  std::mt19937_64 g(2);
  const Matrix x = oracle::gaussian(30, 4, g);
  for (double c : {0.25, 3.0, 1e3}) {
    const TestResult a = john_sphericity(Dataset(x), true);
    const TestResult b = john_sphericity(Dataset(c * x), true);
    CHECK(oracle::rel_err(a.statistic, b.statistic) < 1e-12);
    CHECK(std::fabs(a.p_value - b.p_value) < 1e-12);
  }

  const auto p = null_pvalues(2000, 23, [](RngStream& rng) {
    return john_sphericity(Dataset(rng.normal_matrix(150, 3)), true).p_value;
  });
  CHECK(oracle::ks_uniform(p) < 0.05);
}

TEST_CASE("nagao_identity") {
  CHECK(nagao_identity(CovMatrix::identity(3), 10, false).statistic == doctest::Approx(0.0));
  CHECK(nagao_identity(CovMatrix(2.0 * Matrix::Identity(2, 2)), 10, false).statistic ==
        doctest::Approx(1.0));
  CHECK(nagao_identity(CovMatrix(Matrix::Zero(4, 4)), 10, false).statistic ==
        doctest::Approx(1.0));

  const auto p = null_pvalues(2000, 24, [](RngStream& rng) {
    return nagao_identity(Dataset(rng.normal_matrix(150, 3)), true).p_value;
  });
  CHECK(oracle::ks_uniform(p) < 0.05);
}

TEST_CASE("box_m") {
  std::mt19937_64 g(3);
  const Matrix x = oracle::gaussian(25, 4, g);
  const TestResult same = box_m(Dataset(x), Dataset(x));
  CHECK(std::fabs(same.statistic) < 1e-9);
  CHECK(same.p_value == doctest::Approx(1.0));
  CHECK(same.reference.df == 10);

  const Matrix y = oracle::gaussian(30, 4, g);
  const Matrix q = rotation(4, g);
  const double a = box_m(Dataset(x), Dataset(y)).statistic;
  const double b = box_m(Dataset(x * q.transpose()), Dataset(y * q.transpose())).statistic;
  CHECK(oracle::rel_err(a, b) < 1e-10);

  CHECK(error_kind([&] {
          box_m(Dataset(oracle::gaussian(4, 5, g)), Dataset(oracle::gaussian(30, 5, g)));
        }) == ErrorKind::rank_deficient);

  const auto p = null_pvalues(2000, 25, [](RngStream& rng) {
    return box_m(Dataset(rng.normal_matrix(100, 3)), Dataset(rng.normal_matrix(100, 3))).p_value;
  });
  const double size = rejection_rate(p);
  CHECK(size >= 0.03);
  CHECK(size <= 0.08);
  CHECK(oracle::ks_uniform(p) < 0.05);
}

TEST_CASE("wald_two_sample") {
  Matrix two(2, 1);
  two << 0, 2;
  CHECK(wald_two_sample(Dataset(two), Dataset(two)).statistic == doctest::Approx(1.5));

  std::mt19937_64 g(4);
  const Matrix x = oracle::gaussian(20, 3, g), y = oracle::gaussian(25, 3, g);
  Matrix a = oracle::gaussian(3, 3, g);
  a += 3.0 * Matrix::Identity(3, 3);
  const double s0 = wald_two_sample(Dataset(x), Dataset(y)).statistic;
  const double s1 = wald_two_sample(Dataset(x * a.transpose()), Dataset(y * a.transpose())).statistic;
  CHECK(oracle::rel_err(s0, s1) < 1e-10);

  CHECK(error_kind([&] {
          wald_two_sample(Dataset(oracle::gaussian(3, 8, g)), Dataset(oracle::gaussian(3, 8, g)));
        }) == ErrorKind::rank_deficient);
}
