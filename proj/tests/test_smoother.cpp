#include <algorithm>
#include <cmath>
#include <vector>

#include "doctest.h"
#include "med/errors.hpp"
#include "med/smoother.hpp"
#include "oracle_wls.hpp"
#include "test_data.hpp"

using med::Surface;

namespace {

bool close(double a, double b, double tol) {
  return std::fabs(a - b) <= tol * std::max(1.0, std::fabs(b));
}

med::SmootherConfig base_config(double h, int grid = 101) {
  med::SmootherConfig cfg;
  cfg.h_x = h;
  cfg.h_y = h;
  cfg.grid_size = grid;
  return cfg;
}

}  // namespace

TEST_CASE("local linear fit reproduces affine response surfaces") {
  const auto ds = testdata::sparse(101, 9, 7);
  const auto cfg = base_config(0.25);
  auto affine = [](double, double, double t1, double t2) { return 2.0 + 3.0 * t1 - t2; };

  const std::vector<std::pair<double, double>> pts = {{0.3, 0.6}, {0.5, 0.5}, {0.08, 0.9}};
  for (auto [t1, t2] : pts) {
    const double got = med::pair_surface_at_with_response(ds, Surface::cross, cfg, t1, t2, affine);
    CHECK(std::fabs(got - (2.0 + 3.0 * t1 - t2)) < 1e-9);
  }
  for (auto [t1, t2] : {std::pair{0.4, 0.4}, std::pair{0.25, 0.75}}) {
    const double got =
        med::pair_surface_at_with_response(ds, Surface::within_x, cfg, t1, t2, affine);
    CHECK(std::fabs(got - (2.0 + 3.0 * t1 - t2)) < 1e-9);
  }
  for (auto [t1, t2] : {std::pair{0.5, 0.5}, std::pair{0.6, 0.2}}) {
    const double got =
        med::pair_surface_at_with_response(ds, Surface::within_y, cfg, t1, t2, affine);
    CHECK(std::fabs(got - (2.0 + 3.0 * t1 - t2)) < 1e-9);
  }
}

TEST_CASE("constant responses come back as the constant") {
  const auto ds = testdata::sparse(77, 8, 8);
  const auto cfg = base_config(0.2);
  auto constant = [](double, double, double, double) { return 5.0; };
  for (auto s : {Surface::cross, Surface::within_x, Surface::within_y})
    for (auto [t1, t2] : {std::pair{0.5, 0.5}, std::pair{0.3, 0.7}})
      CHECK(std::fabs(med::pair_surface_at_with_response(ds, s, cfg, t1, t2, constant) - 5.0) <
            1e-12);
}

TEST_CASE("surface fits match brute-force weighted normal equations") {
  const auto ds = testdata::sparse(4242, 9, 7);
  const auto cfg = base_config(0.2, 21);

  const struct {
    Surface s;
    double t1, t2;
  } points[] = {
      {Surface::cross, 0.37, 0.61},   {Surface::cross, 0.5, 0.5},
      {Surface::cross, 0.04, 0.5},    {Surface::within_x, 0.5, 0.5},
      {Surface::within_x, 0.3, 0.7},  {Surface::within_y, 0.82, 0.82},
      {Surface::within_y, 0.6, 0.2},
  };
  for (const auto& p : points) {
    const double got = med::pair_surface_at(ds, p.s, cfg, p.t1, p.t2);
    const double want = oracle::surface_fit(ds, p.s, cfg.kernel, p.t1, p.t2, cfg.h_x, cfg.h_y);
    CHECK(close(got, want, 1e-9));
  }

  for (auto s : {Surface::cross, Surface::within_x, Surface::within_y}) {
    const auto curve = med::diagonal_curve(ds, s, cfg);
    REQUIRE(curve.grid.size() == 21);
    for (std::size_t i = 0; i < curve.grid.size(); ++i) {
      const double g = curve.grid[i];
      const double want = oracle::surface_fit(ds, s, cfg.kernel, g, g, cfg.h_x, cfg.h_y);
      CHECK(close(curve.values[i], want, 1e-9));
    }
  }
}

TEST_CASE("within fits exclude same-subject pairs") {
  med::TwoSampleDataset ds;
  ds.x.push_back({"a", {{0.2, 0.0}, {0.5, 0.0}, {0.8, 0.0}}});
  ds.x.push_back({"b", {{0.3, 1.0}, {0.6, 1.0}, {0.9, 1.0}}});
  ds.y.push_back({"c", {{0.5, 0.0}}});
  ds.y.push_back({"d", {{0.55, 0.0}}});
  const auto cfg = base_config(0.4);

  // every cross-subject pair has |0 - 1| = 1, so the fit is the constant 1
  CHECK(std::fabs(med::pair_surface_at(ds, Surface::within_x, cfg, 0.5, 0.5) - 1.0) < 1e-12);

  // with same-subject pairs left in, the zero responses pull the fit down
  const double unexcluded =
      oracle::surface_fit(ds.x, ds.x, false, cfg.kernel, 0.5, 0.5, cfg.h_x, cfg.h_x,
                          oracle::abs_diff_response);
  CHECK(unexcluded < 0.9);
}

TEST_CASE("subject storage order never affects fits") {
  const auto ds = testdata::sparse(555, 9, 7);
  auto shuffled = ds;
  std::reverse(shuffled.x.begin(), shuffled.x.end());
  std::rotate(shuffled.y.begin(), shuffled.y.begin() + 3, shuffled.y.end());
  const auto cfg = base_config(0.2, 21);

  for (auto s : {Surface::cross, Surface::within_x, Surface::within_y}) {
    for (auto [t1, t2] : {std::pair{0.45, 0.45}, std::pair{0.3, 0.7}})
      CHECK(med::pair_surface_at(ds, s, cfg, t1, t2) ==
            med::pair_surface_at(shuffled, s, cfg, t1, t2));
    const auto a = med::diagonal_curve(ds, s, cfg);
    const auto b = med::diagonal_curve(shuffled, s, cfg);
    for (std::size_t i = 0; i < a.values.size(); ++i) CHECK(a.values[i] == b.values[i]);
  }
}

TEST_CASE("fits only see observations inside the kernel window") {
  const auto ds = testdata::sparse(31, 9, 7);
  const auto cfg = base_config(0.1);
  const double base_cross = med::pair_surface_at(ds, Surface::cross, cfg, 0.3, 0.3);
  const double base_wx = med::pair_surface_at(ds, Surface::within_x, cfg, 0.25, 0.25);

  auto far_modified = ds;
  for (auto* grp : {&far_modified.x, &far_modified.y})
    for (auto& s : *grp)
      for (auto& p : s.obs)
        if (p.time > 0.55) p.value += 100.0;

  CHECK(med::pair_surface_at(far_modified, Surface::cross, cfg, 0.3, 0.3) == base_cross);
  CHECK(med::pair_surface_at(far_modified, Surface::within_x, cfg, 0.25, 0.25) == base_wx);
}

TEST_CASE("doubling all values doubles every fit exactly") {
  const auto ds = testdata::sparse(909, 8, 6);
  const auto doubled = testdata::map_values(ds, 2.0, 0.0);
  const auto cfg = base_config(0.2);
  for (auto s : {Surface::cross, Surface::within_x, Surface::within_y})
    for (auto [t1, t2] : {std::pair{0.5, 0.5}, std::pair{0.35, 0.65}})
      CHECK(med::pair_surface_at(doubled, s, cfg, t1, t2) ==
            2.0 * med::pair_surface_at(ds, s, cfg, t1, t2));
}

TEST_CASE("value shifts and time translations leave fits unchanged") {
  const auto ds = testdata::dyadic(202, 8, 6);
  const auto cfg = base_config(0.2);

  const auto shifted_values = testdata::map_values(ds, 1.0, 4.0);
  for (auto s : {Surface::cross, Surface::within_x, Surface::within_y})
    CHECK(med::pair_surface_at(shifted_values, s, cfg, 0.375, 0.375) ==
          med::pair_surface_at(ds, s, cfg, 0.375, 0.375));

  const auto shifted_times = testdata::shift_times(ds, 0.25);
  CHECK(med::pair_surface_at(shifted_times, Surface::cross, cfg, 0.625, 0.625) ==
        med::pair_surface_at(ds, Surface::cross, cfg, 0.375, 0.375));
  CHECK(med::pair_surface_at(shifted_times, Surface::within_x, cfg, 0.5, 0.75) ==
        med::pair_surface_at(ds, Surface::within_x, cfg, 0.25, 0.5));
}

TEST_CASE("empty windows trigger bandwidth expansion, then a degenerate error") {
  med::TwoSampleDataset ds;
  ds.x.push_back({"x1", {{0.40, 1.0}, {0.42, 2.0}}});
  ds.x.push_back({"x2", {{0.50, 0.5}, {0.55, 1.5}}});
  ds.y.push_back({"y1", {{0.48, 0.2}, {0.52, 0.4}}});
  ds.y.push_back({"y2", {{0.50, 0.8}}});
  auto cfg = base_config(0.1);

  // two expansions reach the data; the fit must match the oracle at that width
  const double got = med::pair_surface_at(ds, Surface::cross, cfg, 0.2, 0.5);
  const double h_expanded = 0.1 * 1.5 * 1.5;
  const double want =
      oracle::surface_fit(ds, Surface::cross, cfg.kernel, 0.2, 0.5, h_expanded, h_expanded);
  CHECK(close(got, want, 1e-9));

  // three expansions still miss the data entirely
  CHECK_THROWS_AS(med::pair_surface_at(ds, Surface::cross, cfg, 0.05, 0.5),
                  med::DegenerateWindow);
  try {
    med::pair_surface_at(ds, Surface::cross, cfg, 0.05, 0.5);
  } catch (const med::DegenerateWindow& e) {
    CHECK(e.grid_point() == 0.05);
  }
}

TEST_CASE("a window holding a single subject is degenerate for within fits") {
  med::TwoSampleDataset ds;
  ds.x.push_back({"x1", {{0.10, 0.3}, {0.12, 0.9}}});
  ds.x.push_back({"x2", {{0.20, 0.1}, {0.22, 0.7}}});
  ds.y.push_back({"y1", {{0.50, 0.0}}});
  ds.y.push_back({"y2", {{0.55, 0.0}}});
  auto cfg = base_config(0.05);

  const double got = med::pair_surface_at(ds, Surface::within_x, cfg, 0.11, 0.11);
  const double h_expanded = 0.05 * 1.5 * 1.5;
  const double want = oracle::surface_fit(ds, Surface::within_x, cfg.kernel, 0.11, 0.11,
                                          h_expanded, h_expanded);
  CHECK(close(got, want, 1e-9));

  cfg.max_expansions = 1;
  CHECK_THROWS_AS(med::pair_surface_at(ds, Surface::within_x, cfg, 0.11, 0.11),
                  med::DegenerateWindow);
}

TEST_CASE("shared-grid fast path agrees with the generic evaluator") {
  const auto ds = testdata::dense(777, 8, 6, 21);
  auto cfg = base_config(0.2);
  const auto fast = med::all_diagonal_curves(ds, cfg);
  auto slow_cfg = cfg;
  slow_cfg.shared_grid_fast_path = false;
  const auto slow = med::all_diagonal_curves(ds, slow_cfg);

  auto compare = [&](const med::DiagonalCurve& a, const med::DiagonalCurve& b) {
    REQUIRE(a.values.size() == b.values.size());
    for (std::size_t i = 0; i < a.values.size(); ++i) CHECK(close(a.values[i], b.values[i], 1e-10));
  };
  compare(fast.cross, slow.cross);
  compare(fast.within_x, slow.within_x);
  compare(fast.within_y, slow.within_y);

  // spot-check the fast path against the brute-force oracle directly
  for (std::size_t i : {std::size_t{0}, std::size_t{37}, std::size_t{100}}) {
    const double g = fast.cross.grid[i];
    CHECK(close(fast.cross.values[i],
                oracle::surface_fit(ds, Surface::cross, cfg.kernel, g, g, cfg.h_x, cfg.h_y),
                1e-9));
    CHECK(close(fast.within_x.values[i],
                oracle::surface_fit(ds, Surface::within_x, cfg.kernel, g, g, cfg.h_x, cfg.h_x),
                1e-9));
  }
}

TEST_CASE("a single off-grid time disables shared-grid detection") {
  auto ds = testdata::dense(778, 6, 5, 11);
  ds.x[3].obs[5].time += 1e-6;
  auto cfg = base_config(0.2, 31);
  const auto a = med::all_diagonal_curves(ds, cfg);
  auto cfg_off = cfg;
  cfg_off.shared_grid_fast_path = false;
  const auto b = med::all_diagonal_curves(ds, cfg_off);
  for (std::size_t i = 0; i < a.cross.values.size(); ++i) {
    CHECK(a.cross.values[i] == b.cross.values[i]);
    CHECK(a.within_x.values[i] == b.within_x.values[i]);
    CHECK(a.within_y.values[i] == b.within_y.values[i]);
  }
}

TEST_CASE("shared-grid path expands bandwidths like the generic one") {
  med::TwoSampleDataset ds;
  const std::vector<double> times = {0.48, 0.50, 0.52};
  med::Rng rng(99);
  for (int i = 0; i < 3; ++i) {
    med::SubjectRecord sx{"x" + std::to_string(i + 1), {}};
    med::SubjectRecord sy{"y" + std::to_string(i + 1), {}};
    for (double t : times) {
      sx.obs.push_back({t, rng.normal()});
      sy.obs.push_back({t, rng.normal() + 0.5});
    }
    ds.x.push_back(std::move(sx));
    ds.y.push_back(std::move(sy));
  }

  auto cfg = base_config(0.2, 5);
  const auto fast = med::all_diagonal_curves(ds, cfg);
  auto cfg_off = cfg;
  cfg_off.shared_grid_fast_path = false;
  const auto slow = med::all_diagonal_curves(ds, cfg_off);
  // grid edges sit far outside the 0.04-wide design, so the fits are heavy
  // extrapolations and conditioning eats most of the agreement between the
  // two summation orders; this test is about the expansion schedule matching
  for (std::size_t i = 0; i < fast.cross.values.size(); ++i) {
    CHECK(close(fast.cross.values[i], slow.cross.values[i], 1e-6));
    CHECK(close(fast.within_x.values[i], slow.within_x.values[i], 1e-6));
    CHECK(close(fast.within_y.values[i], slow.within_y.values[i], 1e-6));
  }

  cfg.max_expansions = 2;
  cfg_off.max_expansions = 2;
  CHECK_THROWS_AS(med::all_diagonal_curves(ds, cfg), med::DegenerateWindow);
  CHECK_THROWS_AS(med::all_diagonal_curves(ds, cfg_off), med::DegenerateWindow);
}

TEST_CASE("worker count never changes curve values") {
  const auto sparse = testdata::sparse(606, 8, 6);
  auto cfg = base_config(0.2, 31);
  const auto c1 = med::diagonal_curve(sparse, Surface::cross, cfg, 1);
  const auto c4 = med::diagonal_curve(sparse, Surface::cross, cfg, 4);
  for (std::size_t i = 0; i < c1.values.size(); ++i) CHECK(c1.values[i] == c4.values[i]);

  const auto dense = testdata::dense(607, 6, 5, 11);
  const auto d1 = med::all_diagonal_curves(dense, cfg, 1);
  const auto d4 = med::all_diagonal_curves(dense, cfg, 4);
  for (std::size_t i = 0; i < d1.cross.values.size(); ++i) {
    CHECK(d1.cross.values[i] == d4.cross.values[i]);
    CHECK(d1.within_x.values[i] == d4.within_x.values[i]);
    CHECK(d1.within_y.values[i] == d4.within_y.values[i]);
  }
}

TEST_CASE("within fits need at least two subjects") {
  med::TwoSampleDataset ds;
  ds.x.push_back({"only", {{0.4, 1.0}, {0.6, 2.0}}});
  ds.y.push_back({"y1", {{0.4, 0.0}}});
  ds.y.push_back({"y2", {{0.6, 0.0}}});
  const auto cfg = base_config(0.3);
  CHECK_THROWS_AS(med::pair_surface_at(ds, Surface::within_x, cfg, 0.5, 0.5), med::DataError);
  CHECK_NOTHROW(med::pair_surface_at(ds, Surface::cross, cfg, 0.5, 0.5));
}

TEST_CASE("smoother config validation") {
  med::SmootherConfig cfg;
  CHECK_NOTHROW(cfg.validate());
  auto bad = cfg;
  bad.h_x = 0.0;
  CHECK_THROWS_AS(bad.validate(), med::DataError);
  bad = cfg;
  bad.grid_size = 1;
  CHECK_THROWS_AS(bad.validate(), med::DataError);
  bad = cfg;
  bad.expand_factor = 1.0;
  CHECK_THROWS_AS(bad.validate(), med::DataError);
  bad = cfg;
  bad.max_expansions = -1;
  CHECK_THROWS_AS(bad.validate(), med::DataError);
  bad = cfg;
  bad.cond_tol = 0.0;
  CHECK_THROWS_AS(bad.validate(), med::DataError);
}

TEST_CASE("bandwidth rate rule") {
  CHECK(med::bandwidth_rate_rule(100) == 0.2);
  CHECK(std::fabs(med::bandwidth_rate_rule(400) - 0.15157165665103983) < 1e-9);
  CHECK(med::bandwidth_rate_rule(50) > med::bandwidth_rate_rule(100));
  CHECK(med::bandwidth_rate_rule(100) > med::bandwidth_rate_rule(200));
  CHECK_THROWS_AS(med::bandwidth_rate_rule(0), med::DataError);
}
