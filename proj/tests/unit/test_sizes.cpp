// Null rejection rates of the direct statistics at desk scale.
#include <doctest.h>

#include <cmath>
#include <string>

#include "cramp/harness.hpp"
#include "oracles.hpp"

using namespace cramp;

namespace {

StudyRow null_cell(const std::string& id, bool two_sample, Eigen::Index n, Eigen::Index p,
                   int reps, Strategy strategy = Strategy::asymptotic, bool shift = true) {
  StudyCell cell;
  cell.method.id = id;
  cell.method.strategy = strategy;
  cell.method.mc_replicates = 200;
  cell.scenario.two_sample = two_sample;
  cell.scenario.n = n;
  cell.scenario.m = two_sample ? n : 0;
  cell.scenario.p = p;
  cell.scenario.replicates = reps;
  cell.scenario.seed = 11;
  if (shift) cell.scenario.mean = MeanModel::uniform;
  StudyOptions options;
  options.threads = 1;
  const StudyRow row = run_cell(cell, 0, options);
  MESSAGE(id << " " << std::string(to_string(strategy)) << " n=" << n << " p=" << p << " size "
             << row.value);
  REQUIRE(row.error.empty());
  CHECK(row.metric == "size");
  return row;
}

}  // namespace

TEST_SUITE("sizes") {
  TEST_CASE("czz n=20 p=100") {
    const StudyRow r = null_cell("czz-v", false, 20, 100, 500);
    CHECK(std::fabs(r.value - 0.076) <= 0.03);
  }

  TEST_CASE("czz n=50 p=2000") {
    const StudyRow r = null_cell("czz-v", false, 50, 2000, 300);
    CHECK(std::fabs(r.value - 0.058) <= 0.03);
  }

  TEST_CASE("syk one-sample always rejects") {
    CHECK(null_cell("syk-v", false, 20, 100, 500).value >= 0.9);
    CHECK(null_cell("syk-u", false, 20, 100, 500).value >= 0.9);
  }

  TEST_CASE("lw over-rejects") {
    CHECK(null_cell("lw", false, 20, 100, 500).value >= 0.6);
  }

  TEST_CASE("syk two-sample always rejects") {
    CHECK(null_cell("syk2", true, 20, 100, 500, Strategy::asymptotic, false).value >= 0.9);
  }

  TEST_CASE("li-chen monte-carlo") {
    const StudyRow r = null_cell("lc", true, 20, 100, 400, Strategy::monte_carlo, false);
    CHECK(r.value >= 0.02);
    CHECK(r.value <= 0.09);
  }

  TEST_CASE("clx monte-carlo") {
    const StudyRow r = null_cell("clx", true, 20, 100, 200, Strategy::monte_carlo, false);
    CHECK(r.value >= 0.02);
    CHECK(r.value <= 0.09);
  }

  // Published sizes that the printed formulas do not reproduce. The assertions
  // keep the published targets and are expected to fail.
  TEST_CASE("schott asymptotic published size" * doctest::should_fail()) {
    const StudyRow r = null_cell("schott", true, 20, 100, 500, Strategy::asymptotic, false);
    CHECK(std::fabs(r.value - 0.454) <= oracle::mc_tol(0.454, 500));
  }

  TEST_CASE("schott monte-carlo size" * doctest::should_fail()) {
    const StudyRow r = null_cell("schott", true, 20, 100, 200, Strategy::monte_carlo, false);
    CHECK(r.value >= 0.02);
    CHECK(r.value <= 0.09);
  }

  TEST_CASE("lw published size" * doctest::should_fail()) {
    const StudyRow r = null_cell("lw", false, 20, 100, 500);
    CHECK(std::fabs(r.value - 0.806) <= oracle::mc_tol(0.806, 500));
  }

  TEST_CASE("li-chen asymptotic published size" * doctest::should_fail()) {
    const StudyRow r = null_cell("lc", true, 20, 100, 500, Strategy::asymptotic, false);
    CHECK(std::fabs(r.value - 0.229) <= oracle::mc_tol(0.229, 500));
  }

  TEST_CASE("clx analytic published size" * doctest::should_fail()) {
    const StudyRow r = null_cell("clx", true, 20, 100, 500, Strategy::asymptotic, false);
    CHECK(std::fabs(r.value - 0.85) <= 0.07);
  }
}
