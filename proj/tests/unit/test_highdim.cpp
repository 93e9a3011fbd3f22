#include <doctest.h>

#include <functional>
#include <numeric>
#include <random>

#include "cramp/harness.hpp"
#include "cramp/highdim.hpp"
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
  return ErrorKind::io;
}

Matrix permute_rows(const Matrix& x, std::mt19937_64& g) {
  std::vector<int> idx(x.rows());
  std::iota(idx.begin(), idx.end(), 0);
  std::shuffle(idx.begin(), idx.end(), g);
  Matrix out(x.rows(), x.cols());
  for (Eigen::Index i = 0; i < x.rows(); ++i) out.row(i) = x.row(idx[i]);
  return out;
}

}  // namespace

TEST_CASE("U-statistics match brute-force enumeration") {
  std::mt19937_64 g(31);
  for (int n = 4; n <= 8; ++n) {
    for (int p = 2; p <= 5; ++p) {
      for (int rep = 0; rep < 10; ++rep) {
        const Matrix x = oracle::gaussian(n, p, g) + Matrix::Constant(n, p, 0.3);
        const Matrix y = oracle::gaussian(n + 1 - rep % 2, p, g);
        const TraceEstimates t = czz_trace_estimators(Dataset(x));
        CHECK(oracle::rel_err(t.t1, oracle::t1n(x)) < 1e-10);
        CHECK(oracle::rel_err(t.t2, oracle::t2n(x)) < 1e-10);
        const LiChenTerms lc = li_chen_terms(Dataset(x), Dataset(y));
        CHECK(oracle::rel_err(lc.a1, oracle::t2n(x)) < 1e-10);
        CHECK(oracle::rel_err(lc.a2, oracle::t2n(y)) < 1e-10);
        CHECK(oracle::rel_err(lc.c, oracle::cnm(x, y)) < 1e-10);
      }
    }
  }
}

TEST_CASE("trace estimators on degenerate inputs") {
  const Matrix same = Matrix::Constant(6, 4, 2.0);
  CHECK(std::fabs(czz_trace_estimators(Dataset(same)).t1) < 1e-12);
  CHECK(error_kind([] { czz_trace_estimators(Dataset(Matrix::Ones(3, 4))); }) ==
        ErrorKind::sample_size);
  CHECK(error_kind([&] { czz_one_sample(Dataset(same)); }) == ErrorKind::degenerate_input);

  // raw moments of two orthonormal rows: T1n = (1 + 1)/2 - 0 = 1
  Matrix e = Matrix::Identity(2, 3);
  CHECK(oracle::t1n(e) == doctest::Approx(1.0));
}

TEST_CASE("trace estimators are unbiased") {
  for (int p : {5, 20}) {
    for (bool graded : {false, true}) {
      Vector d = Vector::Ones(p);
      if (graded) d = Vector::LinSpaced(p, 1, p) / p;
      const double tr1 = d.sum(), tr2 = d.squaredNorm();
      const int reps = 2000;
      double s1 = 0, q1 = 0, s2 = 0, q2 = 0;
      for (int r = 0; r < reps; ++r) {
        RngStream rng(41 + p, r);
        const Matrix x = rng.normal_matrix(10, p) * d.cwiseSqrt().asDiagonal();
        const TraceEstimates t = czz_trace_estimators(Dataset(x));
        s1 += t.t1;
        q1 += t.t1 * t.t1;
        s2 += t.t2;
        q2 += t.t2 * t.t2;
      }
      const double m1 = s1 / reps, m2 = s2 / reps;
      const double se1 = std::sqrt((q1 / reps - m1 * m1) / reps);
      const double se2 = std::sqrt((q2 / reps - m2 * m2) / reps);
      CHECK(std::fabs(m1 - tr1) < 3 * se1);
      CHECK(std::fabs(m2 - tr2) < 3 * se2);
    }
  }
}

TEST_CASE("lw_identity") {
  CHECK(lw_identity(CovMatrix::identity(5), 20, false).statistic == doctest::Approx(0.0));
  CHECK(lw_identity(CovMatrix(2.0 * Matrix::Identity(2, 2)), 4, false).statistic ==
        doctest::Approx(-0.5));
  const TestResult scaled = lw_identity(CovMatrix(2.0 * Matrix::Identity(2, 2)), 4, true);
  CHECK(scaled.statistic == doctest::Approx(4 * 2 * -0.5 / 2));
  CHECK(scaled.reference.df == 3);
}

TEST_CASE("syk statistics follow the printed estimators") {
  std::mt19937_64 g(51);
  for (int rep = 0; rep < 10; ++rep) {
    const Matrix x = oracle::gaussian(9 + rep, 7, g);
    const CovMatrix s = sample_covariance(Dataset(x));
    const double n = double(x.rows());
    CHECK(oracle::rel_err(syk_a2(s, x.rows()), oracle::syk_bracket(s.values(), n, false)) < 1e-10);
    CHECK(oracle::rel_err(syk_delta(s, x.rows()), oracle::syk_bracket(s.values(), n, true)) < 1e-10);

    const OneSamplePair pair = syk_one_sample(Dataset(x));
    const double a1 = s.values().trace() / 7.0;
    const double a2 = oracle::syk_bracket(s.values(), n, false);
    CHECK(oracle::rel_err(pair.sphericity.statistic, (n - 1) / 2 * (a2 / a1 - 1)) < 1e-10);
    CHECK(oracle::rel_err(pair.identity.statistic, (n - 1) / 2 * (a2 - 2 * a1 + 1)) < 1e-10);
    CHECK(pair.identity.p_value == doctest::Approx(normal_sf(pair.identity.statistic)));
  }
  CHECK(error_kind([] { syk_one_sample(Dataset(Matrix::Ones(3, 4))); }) == ErrorKind::sample_size);
  CHECK(error_kind([] { syk_one_sample(Dataset(Matrix::Ones(6, 4))); }) ==
        ErrorKind::degenerate_input);
}

TEST_CASE("czz statistics") {
  std::mt19937_64 g(52);
  const Matrix x = oracle::gaussian(12, 30, g);
  const OneSamplePair pair = czz_one_sample(Dataset(x));
  const double t1 = oracle::t1n(x), t2 = oracle::t2n(x);
  const double u = 30 * t2 / (t1 * t1) - 1, v = t2 / 30 - 2 * t1 / 30 + 1;
  CHECK(oracle::rel_err(pair.sphericity.statistic, 12 * u / 2) < 1e-9);
  CHECK(oracle::rel_err(pair.identity.statistic, 12 * v / 2) < 1e-9);
}

TEST_CASE("two-sample statistics on identical groups") {
  std::mt19937_64 g(53);
  const Matrix x = oracle::gaussian(10, 6, g);
  const Dataset d(x);

  CHECK(clx_statistic(d, d) == 0.0);

  // Schott: the difference term vanishes, leaving the corrections
  const CovMatrix s = sample_covariance(d);
  const double n = 10, tr = s.values().trace(), tr2 = s.values().squaredNorm();
  const double corr1 = (n - 2) / ((n + 1) * (n - 1)) * ((n - 1) * (n - 3) * tr2 + (n - 1) * tr * tr);
  const double corr2 =
      (n - 2) / ((n + 1) * (n - 1)) * ((n - 1) * (n - 3) * tr2 + (n - 1) * (n - 1) * tr * tr);
  const TestResult sch = schott_two_sample(d, d, Strategy::asymptotic);
  CHECK(oracle::rel_err(sch.raw, -(corr1 + corr2)) < 1e-10);

  // SYK: numerator 2 (Delta - tr S^2 / p)
  const double delta = oracle::syk_bracket(s.values(), n, true);
  const double num = 2 * (delta - tr2 / 6);
  const double den = 2 * (2 / (n - 1)) * delta;
  CHECK(oracle::rel_err(syk_two_sample(d, d).statistic, num / den) < 1e-10);

  const Matrix constant = Matrix::Constant(6, 5, 1.25);
  const LiChenTerms lc = li_chen_terms(Dataset(constant), Dataset(constant));
  CHECK(std::fabs(lc.a1 + lc.a2 - 2 * lc.c) < 1e-12);
  CHECK(std::fabs(lc.a1) < 1e-12);
}

TEST_CASE("location and permutation invariance") {
  std::mt19937_64 g(54);
  const Matrix x = oracle::gaussian(12, 8, g), y = oracle::gaussian(15, 8, g);
  const Matrix shift = Vector::LinSpaced(8, -3, 3).transpose().replicate(15, 1);
  const Dataset dx(x), dy(y), dys(y + shift);

  CHECK(oracle::rel_err(clx_statistic(dx, dy), clx_statistic(dx, dys)) < 1e-10);
  CHECK(oracle::rel_err(li_chen_two_sample(dx, dy).statistic,
                        li_chen_two_sample(dx, dys).statistic) < 1e-9);
  CHECK(oracle::rel_err(czz_one_sample(dy).identity.statistic,
                        czz_one_sample(dys).identity.statistic) < 1e-9);

  const Dataset px(permute_rows(x, g)), py(permute_rows(y, g));
  CHECK(oracle::rel_err(clx_statistic(dx, dy), clx_statistic(px, py)) < 1e-12);
  CHECK(oracle::rel_err(li_chen_two_sample(dx, dy).statistic,
                        li_chen_two_sample(px, py).statistic) < 1e-10);
  CHECK(oracle::rel_err(schott_two_sample(dx, dy, Strategy::asymptotic).statistic,
                        schott_two_sample(px, py, Strategy::asymptotic).statistic) < 1e-10);
  CHECK(oracle::rel_err(syk_two_sample(dx, dy).statistic, syk_two_sample(px, py).statistic) <
        1e-10);
  CHECK(oracle::rel_err(czz_one_sample(dx).sphericity.statistic,
                        czz_one_sample(px).sphericity.statistic) < 1e-10);
  CHECK(oracle::rel_err(syk_one_sample(dx).sphericity.statistic,
                        syk_one_sample(px).sphericity.statistic) < 1e-10);
  CHECK(oracle::rel_err(lw_identity(dx).statistic, lw_identity(px).statistic) < 1e-10);
}

TEST_CASE("clx errors and monte-carlo p-values") {
  Matrix x = Matrix::Zero(6, 3), y = Matrix::Zero(6, 3);
  x.col(0).setLinSpaced(6, 0, 1);
  y.col(0).setLinSpaced(6, 1, 0);
  CHECK(error_kind([&] { clx_statistic(Dataset(x), Dataset(y)); }) == ErrorKind::degenerate_input);

  std::mt19937_64 g(55);
  const Dataset a(oracle::gaussian(10, 6, g)), b(oracle::gaussian(10, 6, g));
  MonteCarloOptions mc;
  mc.replicates = 99;
  const TestResult r = clx_two_sample(a, b, Strategy::monte_carlo, mc);
  CHECK(r.strategy == Strategy::monte_carlo);
  CHECK(r.reference.kind == RefDistribution::Kind::empirical);
  CHECK(r.reference.sample.size() == 99);
  CHECK(r.p_value >= 0.01);
  CHECK(r.p_value <= 1.0);
  mc.threads = 3;
  CHECK(clx_two_sample(a, b, Strategy::monte_carlo, mc).p_value == r.p_value);
  mc.replicates = 0;
  CHECK(error_kind([&] { clx_two_sample(a, b, Strategy::monte_carlo, mc); }) == ErrorKind::config);
}
