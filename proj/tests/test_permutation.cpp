#include <cmath>
#include <cstddef>
#include <string>
#include <vector>

#include "doctest.h"
#include "med/errors.hpp"
#include "med/permutation.hpp"
#include "med/rng.hpp"
#include "test_data.hpp"

namespace {

// cheap deterministic statistic: absolute difference of pooled value means
double mean_gap(const med::TwoSampleDataset& ds) {
  double sx = 0.0, sy = 0.0;
  std::size_t cx = 0, cy = 0;
  for (const auto& s : ds.x)
    for (const auto& p : s.obs) {
      sx += p.value;
      ++cx;
    }
  for (const auto& s : ds.y)
    for (const auto& p : s.obs) {
      sy += p.value;
      ++cy;
    }
  return std::fabs(sx / static_cast<double>(cx) - sy / static_cast<double>(cy));
}

double binom_pmf(int k, int n, double p) {
  return std::exp(std::lgamma(n + 1.0) - std::lgamma(k + 1.0) - std::lgamma(n - k + 1.0) +
                  k * std::log(p) + (n - k) * std::log1p(-p));
}

}  // namespace

TEST_CASE("permutations reorder whole subjects") {
  med::TwoSampleDataset ds;
  ds.x.push_back({"x1", {{0.1, 1.0}, {0.9, 2.0}}});
  ds.x.push_back({"x2", {{0.3, 3.0}}});
  ds.y.push_back({"y1", {{0.5, 4.0}, {0.6, 5.0}}});

  const auto same = med::apply_permutation(ds, {0, 1, 2});
  CHECK(med::serialize_long_csv(same) == med::serialize_long_csv(ds));

  // full reversal: slots take former subjects 3, 2, 1 (one-based)
  const auto moved = med::apply_permutation(ds, {2, 1, 0});
  REQUIRE(moved.x.size() == 2);
  REQUIRE(moved.y.size() == 1);
  CHECK(moved.x[0].id == "y1");
  CHECK(moved.x[1].id == "x2");
  CHECK(moved.y[0].id == "x1");
  CHECK(moved.x[0].obs.size() == 2);  // schedule travels with the subject
  CHECK(moved.x[0].obs[1].value == 5.0);

  // applying the inverse recovers the original dataset
  const std::vector<std::size_t> perm = {1, 2, 0};
  std::vector<std::size_t> inv(perm.size());
  for (std::size_t k = 0; k < perm.size(); ++k) inv[perm[k]] = k;
  const auto round_trip = med::apply_permutation(med::apply_permutation(ds, perm), inv);
  CHECK(med::serialize_long_csv(round_trip) == med::serialize_long_csv(ds));

  CHECK_THROWS_AS(med::apply_permutation(ds, {0, 1}), med::DataError);
  CHECK_THROWS_AS(med::apply_permutation(ds, {0, 1, 1}), med::DataError);
  CHECK_THROWS_AS(med::apply_permutation(ds, {0, 1, 3}), med::DataError);
}

TEST_CASE("p-value formula on the lattice") {
  CHECK(med::p_value_from_counts(0, 200) == 0.005);
  CHECK(med::p_value_from_counts(107, 200) == 0.54);
  CHECK(med::p_value_from_counts(199, 200) == 1.0);
  CHECK(med::p_value_from_counts(0, 2) == 0.5);

  // larger observed statistic, fixed permuted values: p never increases
  const std::vector<double> permuted = {0.1, 0.5, 0.9, 0.5};
  double last_p = 2.0;
  for (double obs : {0.0, 0.2, 0.5, 0.7, 1.0}) {
    std::size_t count = 0;
    for (double v : permuted)
      if (v >= obs) ++count;
    const double p = med::p_value_from_counts(count, 5);
    CHECK(p <= last_p);
    last_p = p;
  }
}

TEST_CASE("permutation test: lattice, determinism, retention") {
  const auto ds = testdata::sparse(808, 7, 6);
  med::TestConfig cfg;
  cfg.permutations = 64;
  cfg.seed = 31337;
  cfg.keep_permuted = true;

  const auto r1 = med::permutation_test(ds, cfg, mean_gap);
  CHECK(r1.statistic == mean_gap(ds));
  CHECK(r1.p_value > 0.0);
  CHECK(r1.p_value <= 1.0);
  const double k = r1.p_value * 64.0;
  CHECK(std::fabs(k - std::round(k)) < 1e-9);
  CHECK(r1.p_value >= 1.0 / 64.0);
  REQUIRE(r1.permuted_statistics.size() == 63);

  // reported p is recomputable from the retained statistics
  std::size_t count = 0;
  for (double v : r1.permuted_statistics)
    if (v >= r1.statistic) ++count;
  CHECK(r1.p_value == med::p_value_from_counts(count, 64));
  CHECK(r1.reject == (r1.p_value <= cfg.alpha));

  const auto r2 = med::permutation_test(ds, cfg, mean_gap);
  CHECK(r2.p_value == r1.p_value);
  CHECK(r2.permuted_statistics == r1.permuted_statistics);

  auto cfg_other = cfg;
  cfg_other.seed = 31338;
  const auto r3 = med::permutation_test(ds, cfg_other, mean_gap);
  CHECK(r3.permuted_statistics != r1.permuted_statistics);

  auto cfg_drop = cfg;
  cfg_drop.keep_permuted = false;
  const auto r4 = med::permutation_test(ds, cfg_drop, mean_gap);
  CHECK(r4.permuted_statistics.empty());
  CHECK(r4.p_value == r1.p_value);
}

TEST_CASE("worker count does not change the test result") {
  const auto ds = testdata::sparse(909, 9, 7);
  med::TestConfig base;
  base.permutations = 50;
  base.seed = 4711;
  base.keep_permuted = true;

  auto run = [&](int threads) {
    auto cfg = base;
    cfg.threads = threads;
    return med::permutation_test(ds, cfg, mean_gap);
  };
  const auto a = run(1), b = run(2), c = run(8);
  CHECK(a.p_value == b.p_value);
  CHECK(a.p_value == c.p_value);
  CHECK(a.permuted_statistics == b.permuted_statistics);
  CHECK(a.permuted_statistics == c.permuted_statistics);
}

TEST_CASE("exchangeable data is rejected at the nominal rate") {
  // both groups share one generator, so the test's level is exact; the
  // rejection count over 500 runs must sit inside the exact binomial 99%
  // envelope around alpha = 0.05
  const int reps = 500;
  med::TestConfig cfg;
  cfg.permutations = 40;
  cfg.alpha = 0.05;

  int rejections = 0;
  for (int rep = 0; rep < reps; ++rep) {
    med::Rng rng(med::derive_seed(555, 1, static_cast<std::uint64_t>(rep)));
    med::TwoSampleDataset ds;
    for (int i = 0; i < 6; ++i) {
      med::SubjectRecord sx{"x" + std::to_string(i + 1), {}};
      med::SubjectRecord sy{"y" + std::to_string(i + 1), {}};
      for (int j = 0; j < 3; ++j) {
        sx.obs.push_back({rng.uniform(), rng.normal()});
        sy.obs.push_back({rng.uniform(), rng.normal()});
      }
      ds.x.push_back(std::move(sx));
      ds.y.push_back(std::move(sy));
    }
    cfg.seed = med::derive_seed(555, 2, static_cast<std::uint64_t>(rep));
    if (med::permutation_test(ds, cfg, mean_gap).reject) ++rejections;
  }

  // exact binomial 99% envelope for Binomial(500, 0.05)
  int lo = 0, hi = reps;
  double acc = 0.0;
  for (int i = 0; i <= reps; ++i) {
    acc += binom_pmf(i, reps, 0.05);
    if (acc <= 0.005) lo = i + 1;
    if (acc < 0.995) hi = i + 1;
  }
  INFO("rejections ", rejections, " envelope [", lo, ",", hi, "]");
  CHECK(rejections >= lo);
  CHECK(rejections <= hi);
}

TEST_CASE("a failing replicate reports its index") {
  const auto ds = testdata::sparse(110, 5, 4);
  med::TestConfig cfg;
  cfg.permutations = 20;
  cfg.seed = 99;

  auto picky = [&](const med::TwoSampleDataset& d) -> double {
    if (d.x[0].id != "x1") throw med::NumericError("statistic refused the relabeling");
    return mean_gap(d);
  };
  CHECK_THROWS_AS(med::permutation_test(ds, cfg, picky), med::NumericError);
  try {
    med::permutation_test(ds, cfg, picky);
  } catch (const med::NumericError& e) {
    const std::string msg = e.what();
    CHECK(msg.find("replicate") != std::string::npos);
    CHECK(msg.find("statistic refused") != std::string::npos);
  }
}

TEST_CASE("test config validation") {
  med::TestConfig cfg;
  CHECK_NOTHROW(cfg.validate());
  auto bad = cfg;
  bad.permutations = 1;
  CHECK_THROWS_AS(bad.validate(), med::DataError);
  bad = cfg;
  bad.alpha = 0.0;
  CHECK_THROWS_AS(bad.validate(), med::DataError);
  bad = cfg;
  bad.alpha = 1.0;  // closed right endpoint: "always reject" is a legal setting
  CHECK_NOTHROW(bad.validate());
  bad = cfg;
  bad.alpha = 1.5;
  CHECK_THROWS_AS(bad.validate(), med::DataError);
  bad = cfg;
  bad.smoother.h_x = -1.0;
  CHECK_THROWS_AS(bad.validate(), med::DataError);
}
