#include <gtest/gtest.h>

#include <cmath>
#include <set>
#include <sstream>

#include "covbayes/covfield.hpp"
#include "covbayes/stats.hpp"

using namespace covbayes;

TEST(Window, SquareVolumeAndBounds) {
  for (double n : {1.0, 4.0, 16.0, 2.5}) {
    for (int D : {1, 2}) {
      const auto w = Window::square(n, D);
      EXPECT_NEAR(w.volume(), n, 1e-9);
      EXPECT_DOUBLE_EQ(w.lower[0], -w.upper[0]);
    }
  }
  EXPECT_DOUBLE_EQ(Window::square(16, 2).upper[1], 2.0);
  EXPECT_THROW(Window::square(0.0, 1), ConfigError);
  EXPECT_THROW(Window::square(1.0, 3), ConfigError);
}

TEST(GridLayout, CoversWindowExactly) {
  const auto w = Window::square(4.0, 2);
  const auto g = make_grid_layout(w, 50, 400);
  EXPECT_EQ(g.shape[0], 101u);
  EXPECT_NEAR(w.lower[0] + g.spacing[0] * (g.shape[0] - 1), w.upper[0], 1e-12);
  const auto big = make_grid_layout(Window::square(64.0, 2), 50, 400);
  EXPECT_EQ(big.shape[0], 400u);
  EXPECT_EQ(big.shape[1], 400u);
}

TEST(GpField, HugeLengthscaleIsConstant) {
  const auto w = Window::square(1.0, 1);
  const auto raw = simulate_gp_field(w, 50, 1e6, 11);
  const double v0 = raw.values[0];
  for (double v : raw.values) EXPECT_NEAR(v, v0, 1e-3);
  const auto w2 = Window::square(1.0, 2);
  const auto raw2 = simulate_gp_field(w2, 20, 1e6, 12);
  for (double v : raw2.values) EXPECT_NEAR(v, raw2.values[0], 1e-3);
}

TEST(GpField, MarginalVarianceAndLagCorrelation) {
  const auto w = Window::square(16.0, 1);
  const auto g = make_grid_layout(w, 50, default_max_per_axis(1));
  const double ell = 0.5;
  const std::size_t lag = 25;  // 0.5 / 0.02
  const std::size_t node = 80;
  double sumsq = 0.0, cross = 0.0;
  std::size_t cross_n = 0;
  const int reps = 200;
  for (int r = 0; r < reps; ++r) {
    const auto f = simulate_gp_field(w, g, ell, derive_seed(3, {static_cast<std::uint64_t>(r)}));
    EXPECT_FALSE(f.cholesky_fallback);
    sumsq += f.values[node] * f.values[node];
    for (std::size_t i = 0; i + lag < f.values.size(); ++i) {
      cross += f.values[i] * f.values[i + lag];
      ++cross_n;
    }
  }
  const double var = sumsq / reps;
  EXPECT_GE(var, 0.8);
  EXPECT_LE(var, 1.2);
  EXPECT_NEAR(cross / static_cast<double>(cross_n), std::exp(-0.5), 0.05);
}

TEST(GpField, TwoDimensionalCovariance) {
  const auto w = Window::square(4.0, 2);
  const auto g = make_grid_layout(w, 10, 400);
  double sumsq = 0.0, cross = 0.0;
  const int reps = 200;
  const std::size_t a = 10 * g.shape[1] + 10;
  const std::size_t b = a + 5;  // 0.5 apart along axis 1
  for (int r = 0; r < reps; ++r) {
    const auto f = simulate_gp_field(w, g, 0.5, derive_seed(4, {static_cast<std::uint64_t>(r)}));
    sumsq += f.values[a] * f.values[a];
    cross += f.values[a] * f.values[b];
  }
  // 3 sigma bands for E[X^2] = 1 and E[XY] = exp(-1/2)
  EXPECT_NEAR(sumsq / reps, 1.0, 3.0 * std::sqrt(2.0 / reps));
  EXPECT_NEAR(cross / reps, std::exp(-0.5), 3.0 * std::sqrt((1.0 + std::exp(-1.0)) / reps));
}

TEST(GpField, CholeskyFallbackIsFlaggedAndCalibrated) {
  const auto w = Window::square(1.0, 1);
  const auto g = make_grid_layout(w, 20, 1000);
  double sumsq = 0.0;
  const int reps = 400;
  for (int r = 0; r < reps; ++r) {
    const auto f = simulate_gp_field(w, g, 0.5, derive_seed(5, {static_cast<std::uint64_t>(r)}), 1);
    ASSERT_TRUE(f.cholesky_fallback);
    sumsq += f.values[7] * f.values[7];
  }
  EXPECT_NEAR(sumsq / reps, 1.0, 3.0 * std::sqrt(2.0 / reps));
}

TEST(GpField, CoarseResolutionWarns) {
  const auto f = simulate_gp_field(Window::square(4.0, 1), 1.0, 0.5, 1);
  EXPECT_FALSE(f.warnings.empty());
  EXPECT_TRUE(simulate_gp_field(Window::square(4.0, 1), 50.0, 0.5, 1).warnings.empty());
}

TEST(GpField, SameSeedIsBitIdentical) {
  const auto w = Window::square(4.0, 2);
  const auto g = make_grid_layout(w, 20, 400);
  const auto a = simulate_gaussian_covariate(w, g, {0.5, 1.5}, 99);
  const auto b = simulate_gaussian_covariate(w, g, {0.5, 1.5}, 99);
  EXPECT_EQ(a.values, b.values);
  const auto c = simulate_gaussian_covariate(w, g, {0.5, 1.5}, 100);
  EXPECT_NE(a.values, c.values);
}

TEST(CdfTransform, PointValues) {
  RawField raw;
  raw.window = Window::square(1.0, 1);
  raw.grid.shape = {3, 1};
  raw.grid.spacing = {0.5, 0.0};
  raw.values = {0.0, -1.3, 1.3};
  const auto f = gaussian_cdf_transform(raw);
  EXPECT_DOUBLE_EQ(f.values[0], 0.5);
  EXPECT_NEAR(f.values[1] + f.values[2], 1.0, 1e-12);
}

TEST(CdfTransform, PooledValuesAreUniform) {
  const auto w = Window::square(16.0, 1);
  const auto g = make_grid_layout(w, 50, default_max_per_axis(1));
  std::vector<double> pooled;
  for (int r = 0; r < 300; ++r) {
    const auto f = simulate_gaussian_covariate(w, g, {0.5}, derive_seed(6, {static_cast<std::uint64_t>(r)}));
    // nodes 8 units apart are independent for practical purposes
    pooled.push_back(f.values[0]);
    pooled.push_back(f.values[400]);
    pooled.push_back(f.values[800]);
  }
  const double ks = ks_statistic(pooled, [](double x) { return std::clamp(x, 0.0, 1.0); });
  EXPECT_LT(ks, ks_critical_value(pooled.size(), 0.01));
}

TEST(CdfTransform, ComponentsMustShareGrid) {
  const auto w = Window::square(1.0, 2);
  const auto a = simulate_gp_field(w, make_grid_layout(w, 10, 400), 0.5, 1);
  const auto b = simulate_gp_field(w, make_grid_layout(w, 20, 400), 0.5, 2);
  EXPECT_THROW(gaussian_cdf_transform(std::vector<RawField>{a, b}), ConfigError);
}

TEST(Voronoi, SingleForcedSeedGivesConstantField) {
  const auto w = Window::square(4.0, 2);
  const auto g = make_grid_layout(w, 10, 400);
  VoronoiOptions opts;
  opts.intensity = 1e-9;
  opts.max_retries = 3;
  opts.padding = 0.0;
  VoronoiSeeds seeds;
  const auto f = simulate_voronoi_field(w, g, opts, 8, &seeds);
  EXPECT_EQ(seeds.points.size(), 1u);
  for (double v : f.values) EXPECT_EQ(v, f.values[0]);

  // with the default padding a tiny intensity still leaves one cell over the window
  opts.padding = 3.0;
  const auto g2 = simulate_voronoi_field(w, g, opts, 8, &seeds);
  for (double v : g2.values) EXPECT_EQ(v, g2.values[0]);
}

TEST(Voronoi, DistinctValuesBoundedBySeeds) {
  for (int D : {1, 2}) {
    const auto w = Window::square(4.0, D);
    const auto g = make_grid_layout(w, 25, 400);
    VoronoiOptions opts;
    opts.intensity = 3.0;
    VoronoiSeeds seeds;
    const auto f = simulate_voronoi_field(w, g, opts, 9, &seeds);
    std::set<double> distinct(f.values.begin(), f.values.end());
    EXPECT_LE(distinct.size(), seeds.points.size());
    EXPECT_GT(distinct.size(), 1u);
    for (double v : f.values) {
      EXPECT_GE(v, 0.0);
      EXPECT_LE(v, 1.0);
    }
  }
}

// Brute-force nearest seed check of the bucket search.
TEST(Voronoi, NearestSeedAssignmentMatchesBruteForce) {
  for (int D : {1, 2}) {
    for (double intensity : {0.3, 2.0, 40.0}) {
      const auto w = Window::square(9.0, D);
      const auto g = make_grid_layout(w, 8, 400);
      VoronoiOptions opts;
      opts.intensity = intensity;
      opts.d = 2;
      VoronoiSeeds seeds;
      const auto f = simulate_voronoi_field(w, g, opts, 21, &seeds);
      for (std::size_t i = 0; i < f.node_count(); ++i) {
        const Vec2 x = f.node_position(i);
        double best = 1e300;
        std::size_t arg = 0;
        for (std::size_t s = 0; s < seeds.points.size(); ++s) {
          const double dx = seeds.points[s][0] - x[0], dy = seeds.points[s][1] - x[1];
          if (dx * dx + dy * dy < best) {
            best = dx * dx + dy * dy;
            arg = s;
          }
        }
        ASSERT_EQ(f.node_value(i), seeds.marks[arg]) << "D=" << D << " node " << i;
      }
    }
  }
}

TEST(Voronoi, PooledNodeValuesAreUniform) {
  const auto w = Window::square(16.0, 1);
  const auto g = make_grid_layout(w, 10, default_max_per_axis(1));
  VoronoiOptions opts;
  opts.intensity = 4.0;
  std::vector<double> pooled;
  for (int r = 0; r < 100; ++r) {
    const auto f = simulate_voronoi_field(w, g, opts, derive_seed(10, {static_cast<std::uint64_t>(r)}));
    pooled.push_back(f.values[0]);
    pooled.push_back(f.values[80]);
    pooled.push_back(f.values[160]);
  }
  const double ks = ks_statistic(pooled, [](double x) { return x; });
  EXPECT_LT(ks, ks_critical_value(pooled.size(), 0.01));
}

TEST(Voronoi, RejectsNonPositiveIntensity) {
  VoronoiOptions opts;
  opts.intensity = 0.0;
  const auto w = Window::square(1.0, 1);
  EXPECT_THROW(simulate_voronoi_field(w, make_grid_layout(w, 10, 100), opts, 1), ConfigError);
}

namespace {

CovariateField tiny_field(Interpolation interp) {
  CovariateField f;
  f.window = Window::box({0.0, 0.0}, {1.0, 1.0}, 2);
  f.grid.shape = {2, 2};
  f.grid.spacing = {1.0, 1.0};
  f.interpolation = interp;
  f.values = {0.0, 0.0, 1.0, 1.0};  // (0,0),(0,1),(1,0),(1,1)
  return f;
}

}  // namespace

TEST(EvalCovariate, NodeValuesAndBilinearCenter) {
  const auto f = tiny_field(Interpolation::bilinear);
  EXPECT_DOUBLE_EQ(eval_covariate(f, {1.0, 0.0})[0], 1.0);
  EXPECT_DOUBLE_EQ(eval_covariate(f, {0.0, 1.0})[0], 0.0);
  EXPECT_DOUBLE_EQ(eval_covariate(f, {0.5, 0.5})[0], 0.5);
  const auto n = tiny_field(Interpolation::nearest);
  EXPECT_DOUBLE_EQ(eval_covariate(n, {0.9, 0.2})[0], 1.0);
  EXPECT_DOUBLE_EQ(eval_covariate(n, {0.1, 0.8})[0], 0.0);
}

TEST(EvalCovariate, ClampsAndRejectsOutside) {
  auto f = tiny_field(Interpolation::bilinear);
  f.values = {1.0 + 1e-16, 1.0 + 1e-16, 1.0, 1.0};
  f.values[0] = std::nextafter(1.0, 2.0);
  EXPECT_EQ(eval_covariate(f, {0.0, 0.0})[0], 1.0);
  EXPECT_THROW(eval_covariate(f, {1.5, 0.5}), std::domain_error);
  EXPECT_THROW(eval_covariate(f, {0.5, -0.1}), std::domain_error);
}

TEST(Ergodicity, ConstantFunction) {
  const auto w = Window::square(4.0, 2);
  const auto f = simulate_gaussian_covariate(w, make_grid_layout(w, 10, 400), {0.5}, 3);
  const auto r = ergodicity_diagnostic(f, [](const Vec2&) { return 0.7; }, 0.5);
  EXPECT_NEAR(r.spatial_average, 0.7, 1e-12);
  EXPECT_NEAR(r.deviation, 0.2, 1e-12);
}

TEST(Ergodicity, LargeWindowAverageConcentrates) {
  const auto w = Window::square(256.0, 2);
  const auto g = make_grid_layout(w, 50, 400);
  int within = 0;
  for (int r = 0; r < 100; ++r) {
    const auto f = simulate_gaussian_covariate(w, g, {0.5}, derive_seed(12, {static_cast<std::uint64_t>(r)}));
    const auto e = ergodicity_diagnostic(f, [](const Vec2& z) { return z[0]; }, 0.5);
    if (e.deviation < 0.05) ++within;
  }
  EXPECT_GE(within, 95);
}

TEST(Ergodicity, DeviationShrinksWithWindow) {
  auto mean_dev = [](double n) {
    const auto w = Window::square(n, 2);
    const auto g = make_grid_layout(w, 20, 400);
    double s = 0.0;
    for (int r = 0; r < 50; ++r) {
      const auto f = simulate_gaussian_covariate(w, g, {0.5}, derive_seed(13, {static_cast<std::uint64_t>(r)}));
      s += ergodicity_diagnostic(f, [](const Vec2& z) { return z[0]; }, 0.5).deviation;
    }
    return s / 50.0;
  };
  EXPECT_LT(mean_dev(64.0), mean_dev(1.0));
}

TEST(Raster, RoundTripIsBitExact) {
  for (int D : {1, 2}) {
    const auto w = Window::square(2.0, D);
    const auto g = make_grid_layout(w, 10, 400);
    const auto f = simulate_gaussian_covariate(w, g, D == 2 ? std::vector{0.5, 1.5} : std::vector{0.5}, 5);
    std::stringstream ss;
    write_raster(ss, f);
    const auto back = read_raster(ss);
    EXPECT_EQ(back.values, f.values);
    EXPECT_EQ(back.grid.shape, f.grid.shape);
    EXPECT_EQ(back.grid.spacing, f.grid.spacing);
    EXPECT_EQ(back.d, f.d);
    EXPECT_EQ(back.window.lower, f.window.lower);
    EXPECT_NEAR(back.window.volume(), f.window.volume(), 1e-12);
  }
}

TEST(Raster, MalformedInputs) {
  {
    std::stringstream ss("not a raster\n");
    EXPECT_THROW(read_raster(ss), FormatError);
  }
  {
    std::stringstream ss("# raster D=1 d=1 shape=3 origin=0 spacing=0.5\n0.1\n0.2\n");
    EXPECT_THROW(read_raster(ss), FormatError);
  }
  {
    std::stringstream ss("# raster D=1 d=1 shape=2 origin=0 spacing=0.5\n0.1\n1.5\n");
    EXPECT_THROW(read_raster(ss), DataError);
  }
  {
    std::stringstream ss("# raster D=1 d=1 shape=2 origin=0 spacing=0.5\n0.1\nabc\n");
    EXPECT_THROW(read_raster(ss), FormatError);
  }
}
