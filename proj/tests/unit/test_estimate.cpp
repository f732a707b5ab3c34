#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <map>

#include "covbayes/estimate.hpp"
#include "covbayes/samplers.hpp"
#include "covbayes/scenarios.hpp"
#include "covbayes/stats.hpp"

using namespace covbayes;

namespace {

PriorSpec gaussian_spec(std::size_t L, double n = 1.0) {
  PriorSpec s;
  s.kind = PriorKind::gaussian;
  s.alpha = 1.5;
  s.truncation = L;
  s.n = n;
  return s;
}

// omega with only the constant scaling coefficient set, so rho == exp(c).
std::vector<double> constant_omega(std::size_t L, double c) {
  std::vector<double> w(L, 0.0);
  w[0] = c;
  return w;
}

std::vector<std::vector<double>> prior_omegas(const PriorSpec& s, std::size_t count, std::uint64_t seed) {
  Rng rng(seed);
  std::normal_distribution<double> nd;
  std::vector<std::vector<double>> out;
  for (std::size_t k = 0; k < count; ++k) {
    std::vector<double> xi(s.truncation);
    for (double& x : xi) x = nd(rng);
    out.push_back(transform_whitened(s, xi));
  }
  return out;
}

struct Sim {
  CovariateField field;
  PointPattern pattern;
};

Sim simulate(const IntensityFn& rho, double n, std::uint64_t seed) {
  const auto w = Window::square(n, 2);
  Sim s;
  s.field = simulate_gaussian_covariate(w, make_grid_layout(w, 25, 400), {0.5}, seed);
  s.pattern = simulate_cox_thinning(rho, s.field, seed + 1).pattern;
  return s;
}

// Midpoint rule of f(Z(x)) over the window on its own 200^2 grid.
double window_integral(const CovariateField& field, const IntensityFn& f) {
  const auto& w = field.window;
  const int m = 200;
  double sum = 0.0;
  for (int i = 0; i < m; ++i)
    for (int j = 0; j < m; ++j) {
      const Vec2 x{w.lower[0] + (i + 0.5) * w.side(0) / m, w.lower[1] + (j + 0.5) * w.side(1) / m};
      sum += f(eval_covariate(field, x));
    }
  return sum * w.volume() / (m * m);
}

}  // namespace

TEST(EvalGrid, Defaults) {
  const auto g1 = make_eval_grid(1);
  ASSERT_EQ(g1.points.size(), 512u);
  EXPECT_EQ(g1.points.front()[0], 0.0);
  EXPECT_DOUBLE_EQ(g1.points.back()[0], 1.0);
  const auto g2 = make_eval_grid(2);
  ASSERT_EQ(g2.points.size(), 128u * 128u);
  EXPECT_DOUBLE_EQ(g2.points[1][1], 1.0 / 127.0);
  EXPECT_EQ(g2.points[1][0], 0.0);
}

TEST(Summarize, RejectsTooFewSamples) {
  const auto s = gaussian_spec(16);
  EXPECT_THROW(summarize({}, s), ConfigError);
  EXPECT_THROW(summarize({constant_omega(16, 0.0)}, s), ConfigError);
}

TEST(Summarize, IdenticalSamplesGiveZeroWidth) {
  const auto s = gaussian_spec(64);
  const auto w = prior_omegas(s, 1, 4)[0];
  const auto sum = summarize({w, w, w}, s);
  const auto rho = realize_function(s, w);
  for (std::size_t i = 0; i < sum.mean.size(); ++i) {
    EXPECT_NEAR(sum.mean[i], rho(sum.grid.points[i]), 1e-12 * sum.mean[i]);
    EXPECT_NEAR(sum.upper[i] - sum.lower[i], 0.0, 1e-12 * sum.mean[i]);
  }
}

TEST(Summarize, TwoConstantSamples) {
  const auto s = gaussian_spec(16);
  const auto sum = summarize({constant_omega(16, 0.0), constant_omega(16, std::log(3.0))}, s);
  EXPECT_EQ(sum.level, 0.95);
  for (std::size_t i = 0; i < sum.mean.size(); ++i) {
    EXPECT_NEAR(sum.mean[i], 2.0, 1e-9);
    EXPECT_NEAR(sum.lower[i], 1.05, 1e-9);
    EXPECT_NEAR(sum.upper[i], 2.95, 1e-9);
  }
}

TEST(Summarize, PriorMeanMatchesLognormalIdentity) {
  // Rescaled regime: at n = 1 the variance near z = 1 is ~6 and 10^4
  // lognormal draws carry ~20% Monte Carlo error there.
  const auto s = gaussian_spec(64, 4096.0);
  const double r2 = std::pow(4096.0, -0.25);
  const auto sum = summarize(prior_omegas(s, 10000, 123), s);

  // sigma^2(z) = sum_l (r l^{-alpha/d})^2 psi_l(z)^2 with psi_l read off unit syntheses.
  SeriesSynthesizer synth(s.basis(), s.level());
  std::vector<double> var(sum.grid.points.size(), 0.0);
  for (std::size_t ell = 1; ell <= 64; ++ell) {
    std::vector<double> unit(64, 0.0);
    unit[ell - 1] = 1.0;
    const auto psi = synth.synthesize(unit);
    const double sd = std::sqrt(r2) * std::pow(static_cast<double>(ell), -1.5);
    for (std::size_t i = 0; i < var.size(); ++i) {
      const double v = psi(sum.grid.points[i]) * sd;
      var[i] += v * v;
    }
  }
  double worst = 0.0;
  for (std::size_t i = 0; i < var.size(); ++i) {
    worst = std::max(worst, std::abs(sum.mean[i] / std::exp(0.5 * var[i]) - 1.0));
    EXPECT_LE(sum.lower[i], sum.upper[i]);
  }
  EXPECT_LT(worst, 0.05);
}

TEST(Summarize, BandsWidenWithDispersion) {
  const auto s = gaussian_spec(64);
  const auto base = prior_omegas(s, 200, 5);
  auto inflated = base;
  for (auto& w : inflated)
    for (double& v : w) v *= 2.0;
  const auto a = summarize(base, s), b = summarize(inflated, s);
  double wa = 0.0, wb = 0.0;
  for (std::size_t i = 0; i < a.mean.size(); ++i) {
    wa += a.upper[i] - a.lower[i];
    wb += b.upper[i] - b.lower[i];
  }
  EXPECT_GT(wb, 1.5 * wa);
}

TEST(PosteriorMean, AveragesLinkedSamples) {
  const auto s = gaussian_spec(16);
  const PosteriorMean m({constant_omega(16, 0.0), constant_omega(16, std::log(3.0))}, s);
  for (double z : {0.0, 0.33, 1.0, 1.7}) EXPECT_NEAR(m({z, 0.0}), 2.0, 1e-9);

  const auto draws = prior_omegas(gaussian_spec(64), 50, 8);
  const PosteriorMean pm(draws, gaussian_spec(64));
  const auto sum = summarize(draws, gaussian_spec(64));
  for (std::size_t i = 0; i < sum.mean.size(); i += 37)
    EXPECT_NEAR(pm(sum.grid.points[i]) / sum.mean[i], 1.0, 5e-3);
}

TEST(RelativeL1, Examples) {
  const auto truth = ground_truth(ScenarioId::sn1d);
  const IntensityFn t = truth.function();
  EXPECT_EQ(relative_l1_error(t, t, 1), 0.0);
  EXPECT_NEAR(relative_l1_error([](const Vec2&) { return 0.0; }, t, 1), 1.0, 1e-12);
  const double plus = relative_l1_error([&](const Vec2& z) { return t(z) + 1.0; }, t, 1);
  EXPECT_NEAR(plus, 1.0 / 99.23, 1e-5);
  EXPECT_NEAR(plus, 0.01008, 5e-5);
  EXPECT_NEAR(relative_l1_error([&](const Vec2& z) { return t(z) - 1.0; }, t, 1), plus, 1e-12);
  EXPECT_THROW(relative_l1_error(t, [](const Vec2&) { return 0.0; }, 1), NumericError);
}

TEST(RelativeL1, TwoDimensional) {
  const IntensityFn t = ground_truth(ScenarioId::sn2d).function();
  EXPECT_EQ(relative_l1_error(t, t, 2), 0.0);
  const double half = relative_l1_error([&](const Vec2& z) { return 0.5 * t(z); }, t, 2);
  EXPECT_NEAR(half, 0.5, 1e-12);
}

TEST(RelativeL1, OccupationMeasure) {
  const IntensityFn t = ground_truth(ScenarioId::sn1d).function();
  const auto sim = simulate(t, 4.0, 31);
  EXPECT_THROW(relative_l1_error(t, t, 1, ErrorMeasure::nu_z), ConfigError);
  const double got = relative_l1_error([&](const Vec2& z) { return t(z) + 1.0; }, t, 1, ErrorMeasure::nu_z,
                                       &sim.field);
  const double expect = sim.field.window.volume() / window_integral(sim.field, t);
  EXPECT_NEAR(got / expect, 1.0, 1e-2);
}

TEST(PlugIn, ConstantAndMonotone) {
  const auto sim = simulate([](const Vec2&) { return 1.0; }, 4.0, 3);
  const auto c = plug_in_spatial([](const Vec2&) { return 7.5; }, sim.field);
  ASSERT_EQ(c.values.size(), sim.field.node_count());
  for (double v : c.values) EXPECT_EQ(v, 7.5);
  EXPECT_NEAR(c.integral(), 7.5 * sim.field.window.volume(), 1e-9);

  const auto m = plug_in_spatial([](const Vec2& z) { return std::exp(3.0 * z[0]); }, sim.field);
  for (std::size_t i = 1; i < m.values.size(); i += 7) {
    const double za = sim.field.node_value(i)[0], zb = sim.field.node_value(i - 1)[0];
    if (za > zb) EXPECT_GT(m.values[i], m.values[i - 1]);
    if (za < zb) EXPECT_LT(m.values[i], m.values[i - 1]);
  }
}

TEST(PlugIn, ConstantWithinVoronoiCells) {
  const auto w = Window::square(4.0, 2);
  VoronoiOptions opts;
  opts.intensity = 2.0;
  VoronoiSeeds seeds;
  const auto field = simulate_voronoi_field(w, make_grid_layout(w, 20, 400), opts, 17, &seeds);
  const auto lam = plug_in_spatial([](const Vec2& z) { return 1.0 + 10.0 * z[0] * z[0]; }, field);
  std::map<std::size_t, double> cell_value;
  std::size_t checked = 0;
  for (std::size_t i = 0; i < field.node_count(); ++i) {
    const Vec2 x = field.node_position(i);
    std::size_t best = 0;
    double bd = INFINITY, second = INFINITY;
    for (std::size_t k = 0; k < seeds.points.size(); ++k) {
      const double dx = x[0] - seeds.points[k][0], dy = x[1] - seeds.points[k][1];
      const double dist = dx * dx + dy * dy;
      if (dist < bd) {
        second = bd;
        bd = dist;
        best = k;
      } else if (dist < second) {
        second = dist;
      }
    }
    if (second - bd < 1e-9) continue;  // on a cell boundary
    auto [it, fresh] = cell_value.emplace(best, lam.values[i]);
    if (!fresh) {
      EXPECT_EQ(it->second, lam.values[i]) << "node " << i;
      ++checked;
    }
  }
  EXPECT_GT(checked, field.node_count() / 2);
}

TEST(PlugIn, ExpectedCountMatchesPattern) {
  const IntensityFn truth = ground_truth(ScenarioId::sn1d).function();
  const auto w = Window::square(16.0, 2);
  const auto field = simulate_gaussian_covariate(w, make_grid_layout(w, 25, 400), {0.5}, 41);
  const auto pattern = simulate_cox_thinning(truth, field, 42).pattern;
  const LikelihoodData data(pattern, field, make_quadrature(w, 2500));
  SamplerConfig c;
  c.iterations = 3000;
  c.burn_in = 1500;
  c.adapt_window = 100;
  const auto spec = gaussian_spec(1024, 16.0);
  const auto r = run_chain(c, PosteriorModel(spec, data), 43);
  const auto lam = plug_in_spatial(PosteriorMean(r.samples, spec).function(), field);
  const double k = static_cast<double>(pattern.count());
  EXPECT_NEAR(lam.integral(), k, 3.0 * std::sqrt(k));
}

TEST(Silverman, HandComputed) {
  const std::vector<Vec2> z{{0.1, 0.0}, {0.2, 0.0}, {0.3, 0.0}, {0.4, 0.0}, {0.5, 0.0}};
  // sd 0.158, IQR/1.34 0.149 wins; 0.9 * 0.2 / 1.34 * 5^{-1/5}
  EXPECT_NEAR(silverman_bandwidth(z, 1)[0], 0.9 * 0.2 / 1.34 * std::pow(5.0, -0.2), 1e-12);
  EXPECT_EQ(silverman_bandwidth(std::vector<Vec2>{{0.3, 0.3}}, 2)[1], 0.1);
  const std::vector<Vec2> same(10, Vec2{0.4, 0.0});
  EXPECT_EQ(silverman_bandwidth(same, 1)[0], 0.1);
}

TEST(Kernel, EmptyPatternIsZero) {
  const auto sim = simulate([](const Vec2&) { return 1.0; }, 1.0, 9);
  PointPattern empty{sim.field.window, {}};
  const KernelEstimate k(empty, sim.field);
  for (double z : {0.0, 0.2, 0.5, 1.0}) EXPECT_EQ(k({z, 0.0}), 0.0);
}

TEST(Kernel, ConstantTruthRecovered) {
  const double c = 40.0;
  std::vector<double> at_half, at_quarter;
  for (int rep = 0; rep < 20; ++rep) {
    const auto sim = simulate([c](const Vec2&) { return c; }, 16.0, 1000 + 2 * rep);
    const KernelEstimate k(sim.pattern, sim.field);
    at_half.push_back(k({0.5, 0.0}));
    at_quarter.push_back(k({0.3, 0.0}));
  }
  std::sort(at_half.begin(), at_half.end());
  std::sort(at_quarter.begin(), at_quarter.end());
  EXPECT_NEAR(quantile_sorted(at_half, 0.5) / c, 1.0, 0.15);
  EXPECT_NEAR(quantile_sorted(at_quarter, 0.5) / c, 1.0, 0.15);
}

TEST(Kernel, MassBalance) {
  const IntensityFn truth = ground_truth(ScenarioId::sn1d).function();
  for (std::uint64_t seed : {51u, 53u}) {
    const auto sim = simulate(truth, 16.0, seed);
    const KernelEstimate k(sim.pattern, sim.field);
    const double mass = window_integral(sim.field, k.function());
    const double K = static_cast<double>(sim.pattern.count());
    EXPECT_NEAR(mass, K, 3.0 * std::sqrt(K)) << "seed " << seed;
  }
}

TEST(Kernel, UnvisitedCovariateValuesGiveZero) {
  // A field confined to [0, 0.2] never reaches z = 0.9.
  const auto sim = simulate([](const Vec2&) { return 20.0; }, 4.0, 61);
  auto field = sim.field;
  for (double& v : field.values) v *= 0.2;
  const KernelEstimate k(sim.pattern, field, {Vec2{0.01, 0.0}, 0, 0});
  EXPECT_EQ(k({0.9, 0.0}), 0.0);
  EXPECT_GT(k({0.1, 0.0}), 0.0);
}

TEST(Kernel, TwoDimensional) {
  const auto w = Window::square(4.0, 2);
  const auto field = simulate_gaussian_covariate(w, make_grid_layout(w, 20, 400), {0.5, 0.5}, 71);
  const auto pattern = simulate_cox_thinning([](const Vec2&) { return 30.0; }, field, 72).pattern;
  const KernelEstimate k(pattern, field);
  EXPECT_GT(k.bandwidth()[1], 0.0);
  const double v = k({0.5, 0.5});
  EXPECT_GT(v, 10.0);
  EXPECT_LT(v, 90.0);
}

TEST(Output, SummaryCsvAndMetricsJson) {
  const auto s = gaussian_spec(16);
  const auto sum = summarize({constant_omega(16, 0.0), constant_omega(16, 1.0)}, s);
  const std::string csv = ::testing::TempDir() + "summary.csv";
  write_summary_csv(csv, sum);
  std::ifstream is(csv);
  std::string line;
  std::getline(is, line);
  EXPECT_EQ(line, "z1,mean,lower,upper");
  std::size_t rows = 0;
  while (std::getline(is, line)) ++rows;
  EXPECT_EQ(rows, 512u);

  RunMetrics m{"sn1d", 16.0, "gaussian", 1.5, 0.0812, 0.24, 2.1, 12345678901234ull};
  const std::string js = ::testing::TempDir() + "metrics.json";
  write_metrics_json(js, m);
  const auto back = read_metrics_json(js);
  EXPECT_EQ(back.scenario, m.scenario);
  EXPECT_EQ(back.n, m.n);
  EXPECT_EQ(back.rel_l1, m.rel_l1);
  EXPECT_EQ(back.seed, m.seed);
  EXPECT_EQ(metrics_json(back), metrics_json(m));
  std::remove(csv.c_str());
  std::remove(js.c_str());
}
