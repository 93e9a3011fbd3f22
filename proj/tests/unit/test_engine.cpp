#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <functional>
#include <numeric>

#include "cramp/classical.hpp"
#include "cramp/engine.hpp"
#include "cramp/projection.hpp"
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

CrampConfig small_config() {
  CrampConfig c;
  c.k = 3;
  c.projections = 20;
  c.null_reps = 200;
  c.threads = 1;
  c.seed = 77;
  return c;
}

std::filesystem::path scratch_dir(const std::string& name) {
  auto dir = std::filesystem::temp_directory_path() / ("cramp-test-" + name);
  std::filesystem::remove_all(dir);
  std::filesystem::create_directories(dir);
  return dir;
}

}  // namespace

TEST_CASE("config validation") {
  CrampConfig c = small_config();
  CHECK_NOTHROW(validate(c));
  c.projections = 0;
  CHECK(error_kind([&] { validate(c); }) == ErrorKind::config);
  c = small_config();
  c.null_reps = 99;
  CHECK(error_kind([&] { validate(c); }) == ErrorKind::config);
  c = small_config();
  c.alpha = 0.0;
  CHECK(error_kind([&] { validate(c); }) == ErrorKind::config);
  c.alpha = 1.5;
  CHECK(error_kind([&] { validate(c); }) == ErrorKind::config);
  c = small_config();
  c.base = BaseTest::box_m;
  CHECK(error_kind([&] { validate(c); }) == ErrorKind::config);
  c.hypothesis = Hypothesis::two_sample;
  CHECK_NOTHROW(validate(c));
  CHECK(error_kind([] { parse_base_test("nope"); }) == ErrorKind::config);
  CHECK(parse_base_test("box-m") == BaseTest::box_m);
  CHECK(hypothesis_of(BaseTest::john) == Hypothesis::one_sample_sphericity);
}

TEST_CASE("lower quantile") {
  std::vector<double> v(100);
  std::iota(v.begin(), v.end(), 1.0);
  CHECK(lower_quantile(v, 0.05) == 5.0);
  CHECK(lower_quantile(v, 0.051) == 6.0);
  CHECK(lower_quantile(v, 1.0) == 100.0);
  CHECK(lower_quantile(v, 0.001) == 1.0);
}

TEST_CASE("projected p-values") {
  RngStream data_rng(5, 5);
  const Dataset x(data_rng.normal_matrix(20, 40));
  CrampConfig c = small_config();
  c.projections = 1;
  const auto one = projected_pvalues(x, c);
  REQUIRE(one.size() == 1);
  RngStream proj(c.seed, stream_index(StreamFamily::observed_projection, 0, 0));
  const ProjectionMatrix r = generate_projection(c.k, 40, proj);
  CHECK(one[0] == base_pvalue(c.base, project_dataset(r, x)));

  c = small_config();
  CHECK(projected_pvalues(x, c) == projected_pvalues(x, c));
  CHECK(projected_pvalues(x, c, 1) != projected_pvalues(x, c, 0));
  c.threads = 4;
  const auto threaded = projected_pvalues(x, c);
  c.threads = 1;
  CHECK(threaded == projected_pvalues(x, c));

  c.k = 19;
  CHECK(error_kind([&] { projected_pvalues(x, c); }) == ErrorKind::dimension);
}

TEST_CASE("null projected p-values are uniform") {
  CrampConfig c = small_config();
  c.k = 5;
  c.projections = 100;
  std::vector<double> pooled;
  for (int rep = 0; rep < 20; ++rep) {
    RngStream rng(6, rep);
    const auto p = projected_pvalues(Dataset(rng.normal_matrix(50, 100)), c, rep);
    pooled.insert(pooled.end(), p.begin(), p.end());
  }
  CHECK(pooled.size() == 2000);
  CHECK(oracle::ks_uniform(pooled) < 0.08);
}

TEST_CASE("critical value with a single projection") {
  CrampConfig c = small_config();
  c.k = 3;
  c.projections = 1;
  c.null_reps = 5000;
  const NullDistribution d = empirical_critical_value({200, 0, 10}, c);
  CHECK(d.sample.size() == 5000);
  CHECK(std::fabs(d.critical_value - 0.05) <= 0.01);
  CHECK(oracle::ks_uniform(d.sample) < 0.03);
}

TEST_CASE("alpha one rejects everything") {
  CrampConfig c = small_config();
  c.alpha = 1.0;
  const NullDistribution d = empirical_critical_value({20, 0, 30}, c);
  CHECK(d.critical_value == *std::max_element(d.sample.begin(), d.sample.end()));
  for (int rep = 0; rep < 5; ++rep) {
    RngStream rng(7, rep);
    CHECK(cramp_test(Dataset(rng.normal_matrix(20, 30)), c).reject);
  }
}

TEST_CASE("critical value is deterministic across threads and sampling is exact") {
  CrampConfig c = small_config();
  const SampleShape shape{15, 0, 25};
  const NullDistribution a = empirical_critical_value(shape, c);
  c.threads = 3;
  const NullDistribution b = empirical_critical_value(shape, c);
  CHECK(a.sample == b.sample);
  CHECK(a.critical_value == b.critical_value);

  c.null_sampling = NullSampling::explicit_matrices;
  c.seed = 78;
  const NullDistribution e = empirical_critical_value(shape, c);
  CHECK(oracle::ks_two_sample_pvalue(a.sample, e.sample) > 0.01);

  CrampConfig two = small_config();
  two.base = BaseTest::box_m;
  two.hypothesis = Hypothesis::two_sample;
  const SampleShape s2{15, 18, 25};
  const NullDistribution r2 = empirical_critical_value(s2, two);
  two.null_sampling = NullSampling::explicit_matrices;
  two.seed = 79;
  const NullDistribution e2 = empirical_critical_value(s2, two);
  CHECK(oracle::ks_two_sample_pvalue(r2.sample, e2.sample) > 0.01);
}

TEST_CASE("outcome invariants") {
  CrampConfig c = small_config();
  c.keep_null_sample = true;
  RngStream rng(8, 0);
  const Dataset x(rng.normal_matrix(20, 30)), y(1.5 * rng.normal_matrix(22, 30));
  for (int two = 0; two < 2; ++two) {
    if (two) {
      c.base = BaseTest::box_m;
      c.hypothesis = Hypothesis::two_sample;
    }
    const CrampOutcome o = two ? cramp_test(x, y, c) : cramp_test(x, c);
    CHECK(o.per_projection_p.size() == std::size_t(c.projections));
    double sum = 0;
    for (double p : o.per_projection_p) sum += p;
    CHECK(o.mean_p == sum / c.projections);
    CHECK(o.reject == (o.mean_p <= o.critical_value));
    REQUIRE(o.null_sample.has_value());
    CHECK(o.null_sample->size() == std::size_t(c.null_reps));
  }
}

TEST_CASE("strong signal is rejected") {
  CrampConfig c;
  c.k = 5;
  c.projections = 100;
  c.null_reps = 1000;
  c.threads = 1;
  NullCache cache;
  int rejects = 0;
  for (int rep = 0; rep < 100; ++rep) {
    RngStream rng(9, rep);
    const Dataset x(std::sqrt(5.0) * rng.normal_matrix(50, 100));
    rejects += cramp_test(x, c, &cache, rep).reject;
  }
  CHECK(rejects >= 99);
}

TEST_CASE("null cache") {
  const auto dir = scratch_dir("cache");
  CrampConfig c = small_config();
  const SampleShape shape{12, 0, 20};
  const std::string key = NullCache::key(shape, c);
  CrampConfig other = c;
  other.alpha = 0.1;
  CHECK(NullCache::key(shape, other) == key);
  other.seed = 1;
  CHECK(NullCache::key(shape, other) != key);

  NullDistribution first;
  {
    NullCache cache(dir);
    first = empirical_critical_value(shape, c, &cache);
  }
  std::size_t files = 0;
  for (const auto& entry : std::filesystem::directory_iterator(dir)) {
    ++files;
    NullCache fresh(dir);
    const auto hit = fresh.find(key);
    REQUIRE(hit.has_value());
    CHECK(*hit == first.sample);

    std::ofstream(entry.path()) << "garbage";
    NullCache broken(dir);
    CHECK_FALSE(broken.find(key).has_value());
    CHECK(empirical_critical_value(shape, c, &broken).sample == first.sample);
  }
  CHECK(files == 1);
  std::filesystem::remove_all(dir);
}
