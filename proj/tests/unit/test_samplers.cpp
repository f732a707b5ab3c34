#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <map>

#include "covbayes/samplers.hpp"
#include "covbayes/scenarios.hpp"
#include "covbayes/stats.hpp"

using namespace covbayes;

namespace {

PriorSpec prior(PriorKind kind, double alpha, double n, std::size_t L = 1024) {
  PriorSpec s;
  s.kind = kind;
  s.alpha = alpha;
  s.n = n;
  s.truncation = L;
  return s;
}

SamplerConfig fixed_step(double b, std::size_t iters, std::size_t burn, std::size_t thin) {
  SamplerConfig c;
  c.b = b;
  c.iterations = iters;
  c.burn_in = burn;
  c.thin = thin;
  c.adapt = false;
  return c;
}

double normal_cdf_ref(double x, double sd) { return 0.5 * std::erfc(-x / (sd * std::sqrt(2.0))); }

double laplace_cdf_ref(double x, double scale) {
  const double t = x / scale;
  return t < 0.0 ? 0.5 * std::exp(t) : 1.0 - 0.5 * std::exp(-t);
}

struct Dataset {
  CovariateField field;
  PointPattern pattern;
  LikelihoodData data;
};

Dataset sn1d_dataset(double n, std::uint64_t seed) {
  const auto w = Window::square(n, 2);
  Dataset d;
  d.field = simulate_gaussian_covariate(w, make_grid_layout(w, 25, 400), {0.5}, seed);
  d.pattern = simulate_cox_thinning(GroundTruth{ScenarioId::sn1d}.function(), d.field, seed + 1).pattern;
  d.data = LikelihoodData(d.pattern, d.field, make_quadrature(w, 2500));
  return d;
}

// Relative L1 distance to the sn1d truth by a 10^4-node midpoint rule.
double rel_l1_sn1d(const std::function<double(double)>& est) {
  const GroundTruth truth{ScenarioId::sn1d};
  double num = 0.0, den = 0.0;
  for (int i = 0; i < 10000; ++i) {
    const double z = (i + 0.5) / 1e4;
    const double t = truth({z, 0.0});
    num += std::abs(est(z) - t);
    den += t;
  }
  return num / den;
}

std::function<double(double)> posterior_mean(const PriorSpec& s, const std::vector<std::vector<double>>& samples) {
  std::vector<RealizedIntensity> rs;
  for (const auto& om : samples) rs.push_back(realize_function(s, om));
  return [rs](double z) {
    double m = 0.0;
    for (const auto& r : rs) m += r({z, 0.0});
    return m / static_cast<double>(rs.size());
  };
}

}  // namespace

TEST(Config, Validation) {
  SamplerConfig c;
  EXPECT_NO_THROW(c.validate());
  c.b = 0.5;
  EXPECT_THROW(c.validate(), ConfigError);
  c.b = 0.0;
  EXPECT_THROW(c.validate(), ConfigError);
  EXPECT_NO_THROW(c.validate(true));
  c.b = 0.1;
  c.burn_in = c.iterations;
  EXPECT_THROW(c.validate(), ConfigError);
}

TEST(Pairing, KernelRequiresMatchingPrior) {
  const auto model = PosteriorModel::flat(prior(PriorKind::besov_laplace, 1.0, 1, 16));
  auto st = initial_state(model, SamplerConfig{});
  Rng rng(1);
  EXPECT_THROW(pcn_step(st, model, 0.1, rng), ConfigError);
}

TEST(Pcn, ZeroStepKeepsChainConstant) {
  const auto d = sn1d_dataset(1.0, 3);
  const PosteriorModel model(prior(PriorKind::gaussian, 1.5, 1.0, 64), d.data);
  auto st = initial_state(model, SamplerConfig{});
  Rng rng(4);
  // Move away from the cold start first so the constancy is not trivial.
  for (int i = 0; i < 50; ++i) pcn_step(st, model, 0.1, rng);
  const auto before = st.transformed;
  for (int i = 0; i < 100; ++i) EXPECT_TRUE(pcn_step(st, model, 0.0, rng));
  EXPECT_EQ(st.transformed, before);
}

TEST(Pcn, FlatLikelihoodAlwaysAccepts) {
  for (auto kind : {PriorKind::gaussian, PriorKind::besov_laplace}) {
    const auto model = PosteriorModel::flat(prior(kind, 1.0, 4.0, 64));
    const auto r = run_chain(fixed_step(0.3, 500, 100, 1), model, 5);
    EXPECT_EQ(r.accepted_count, 500u);
    EXPECT_EQ(r.acceptance_rate, 1.0);
  }
}

TEST(Pcn, FlatLikelihoodPreservesGaussianPrior) {
  const auto spec = prior(PriorKind::gaussian, 1.5, 16.0);
  const auto r = run_chain(fixed_step(0.2, 20000, 10, 10), PosteriorModel::flat(spec), 6);
  const double sd = rescale_factor(spec) * coefficient_weight(spec, 1);
  for (std::size_t ell : {1u, 8u}) {
    std::vector<double> xs;
    for (const auto& s : r.samples) xs.push_back(s[ell - 1]);
    const double sd_ell = rescale_factor(spec) * std::pow(static_cast<double>(ell), -1.5);
    EXPECT_LT(ks_statistic(xs, [&](double x) { return normal_cdf_ref(x, sd_ell); }),
              ks_critical_value(xs.size(), 0.01))
        << "ell=" << ell;
  }
  EXPECT_NEAR(sd, std::pow(16.0, -0.125), 1e-15);
}

TEST(Wpcn, FlatLikelihoodPreservesLaplacePrior) {
  const auto spec = prior(PriorKind::besov_laplace, 1.0, 8.0);
  const auto r = run_chain(fixed_step(0.2, 20000, 10, 10), PosteriorModel::flat(spec), 7);
  for (std::size_t ell : {1u, 5u}) {
    const double scale = rescale_factor(spec) * coefficient_weight(spec, ell);
    std::vector<double> xs;
    for (const auto& s : r.samples) xs.push_back(s[ell - 1]);
    EXPECT_LT(ks_statistic(xs, [&](double x) { return laplace_cdf_ref(x, scale); }),
              ks_critical_value(xs.size(), 0.01))
        << "ell=" << ell;
  }
}

TEST(Wpcn, Deterministic) {
  const auto d = sn1d_dataset(1.0, 8);
  const PosteriorModel model(prior(PriorKind::besov_laplace, 1.0, 1.0, 256), d.data);
  SamplerConfig c;
  c.iterations = 400;
  c.burn_in = 200;
  c.adapt_window = 50;
  const auto a = run_chain(c, model, 99), b = run_chain(c, model, 99);
  ASSERT_EQ(a.trace.size(), b.trace.size());
  for (std::size_t i = 0; i < a.trace.size(); ++i) {
    EXPECT_EQ(a.trace[i].loglik, b.trace[i].loglik);
    EXPECT_EQ(a.trace[i].b, b.trace[i].b);
  }
  EXPECT_EQ(a.samples, b.samples);
  EXPECT_NE(run_chain(c, model, 100).samples, a.samples);
}

TEST(Mwg, ZeroAlphaStepNeverMoves) {
  const auto model = PosteriorModel::flat(prior(PriorKind::gaussian, 1.5, 4.0, 64));
  auto c = fixed_step(0.1, 300, 100, 1);
  c.hyper = HyperConfig{1.0, 0.0, 1.3};
  const auto r = run_chain(c, model, 9);
  EXPECT_EQ(r.alpha_acceptance_rate, 1.0);
  for (const auto& t : r.trace) EXPECT_EQ(t.alpha, 1.3);
}

TEST(Mwg, HyperpriorRatio) {
  EXPECT_NEAR(std::exp(hyperprior_log_density(2.0, 1.0) - hyperprior_log_density(1.0, 1.0)), std::exp(-1.0),
              1e-15);
  EXPECT_EQ(hyperprior_log_density(-0.1, 1.0), -INFINITY);
}

// Under a flat likelihood the alpha chain targets the Exp(1) hyperprior
// (up to the reflection at zero).
TEST(Mwg, FlatLikelihoodAlphaMean) {
  const auto model = PosteriorModel::flat(prior(PriorKind::besov_laplace, 1.0, 4.0, 16));
  auto c = fixed_step(0.2, 50000, 1000, 1);
  c.hyper = HyperConfig{1.0, 0.2, 1.0};
  const auto r = run_chain(c, model, 10);
  const double m = mean(r.sample_alpha);
  EXPECT_GE(m, 0.8);
  EXPECT_LE(m, 1.2);
  for (double a : r.sample_alpha) ASSERT_GE(a, kAlphaFloor);
}

TEST(Mwg, TransformTracksAlpha) {
  const auto d = sn1d_dataset(1.0, 11);
  const PosteriorModel model(prior(PriorKind::gaussian, 1.5, 1.0, 64), d.data);
  auto c = fixed_step(0.05, 200, 100, 1);
  c.hyper = HyperConfig{1.0, 0.3, 1.0};
  ChainState st = initial_state(model, c);
  Rng rng(12);
  for (int i = 0; i < 200; ++i) {
    mwg_step(st, model, 0.05, *c.hyper, rng);
    ASSERT_LT(revalidate(model, st), 1e-9);
  }
}

TEST(RunChain, StoredSampleCountAndRates) {
  const auto model = PosteriorModel::flat(prior(PriorKind::gaussian, 1.5, 1.0, 16));
  const auto r = run_chain(fixed_step(0.1, 100, 50, 5), model, 1);
  EXPECT_EQ(r.samples.size(), 10u);
  EXPECT_EQ(r.trace.size(), 100u);
  EXPECT_DOUBLE_EQ(r.acceptance_rate, static_cast<double>(r.accepted_count) / 100.0);
}

TEST(Adapt, Rule) {
  EXPECT_EQ(adapt_step_size(0.25, 0.1), 0.1);
  EXPECT_DOUBLE_EQ(adapt_step_size(0.50, 0.1), 0.125);
  EXPECT_EQ(adapt_step_size(0.50, 0.45), 0.499);
  EXPECT_DOUBLE_EQ(adapt_step_size(0.05, 0.1), 0.08);
  EXPECT_EQ(adapt_step_size(0.0, 1e-6), 1e-6);
}

TEST(Adapt, FrozenAfterBurnIn) {
  const auto model = PosteriorModel::flat(prior(PriorKind::gaussian, 1.5, 1.0, 16));
  SamplerConfig c;
  c.b = 0.1;
  c.iterations = 1000;
  c.burn_in = 400;
  c.adapt_window = 100;
  const auto r = run_chain(c, model, 2);
  // Flat likelihood accepts everything, so b grows during burn-in only.
  EXPECT_DOUBLE_EQ(r.final_b, 0.1 * std::pow(1.25, 4));
  for (std::size_t i = 400; i < 1000; ++i) EXPECT_EQ(r.trace[i].b, r.final_b);
}

TEST(Cache, LogLikMatchesIndependentEvaluation) {
  for (auto kind : {PriorKind::gaussian, PriorKind::besov_laplace}) {
    const auto d = sn1d_dataset(4.0, 13);
    const auto spec = prior(kind, 1.2, 4.0, 256);
    const PosteriorModel model(spec, d.data);
    SamplerConfig c;
    ChainState st = initial_state(model, c);
    Rng rng(14);
    for (int i = 0; i < 300; ++i) {
      kind == PriorKind::gaussian ? pcn_step(st, model, 0.01, rng) : wpcn_step(st, model, 0.01, rng);
      if (i % 30 != 0) continue;
      ASSERT_LT(revalidate(model, st), 1e-9);
      // Through the generic likelihood path and a fresh realization.
      const double ref = d.data.log_likelihood(realize_function(spec, st.transformed).function());
      EXPECT_NEAR(st.log_lik, ref, 1e-9 * std::max(1.0, std::abs(ref)));
    }
  }
}

// Transition counts between cells of a partition balance pairwise for a
// reversible kernel at stationarity.
TEST(Reversibility, PairwiseFlowsBalanceOnToyTarget) {
  auto spec = prior(PriorKind::gaussian, 1.0, 1.0, 2);
  const PosteriorModel model(spec, [](std::span<const double> om) {
    return -2.0 * (om[0] - 0.7) * (om[0] - 0.7) - 3.0 * (om[1] + 0.3) * (om[1] + 0.3) + om[0] * om[1];
  });
  auto cell = [](const std::vector<double>& om) {
    const int a = om[0] < 0.2 ? 0 : (om[0] < 0.9 ? 1 : 2);
    return 2 * a + (om[1] < -0.2 ? 0 : 1);
  };
  ChainState st = initial_state(model, SamplerConfig{});
  Rng rng(15);
  for (int i = 0; i < 1000; ++i) pcn_step(st, model, 0.3, rng);
  std::map<std::pair<int, int>, double> flow;
  int prev = cell(st.transformed);
  for (int i = 0; i < 400000; ++i) {
    pcn_step(st, model, 0.3, rng);
    const int now = cell(st.transformed);
    if (now != prev) flow[{prev, now}] += 1.0;
    prev = now;
  }
  int pairs = 0;
  for (int i = 0; i < 6; ++i) {
    for (int j = i + 1; j < 6; ++j) {
      const double a = flow[{i, j}], b = flow[{j, i}];
      if (a + b < 100.0) continue;
      ++pairs;
      EXPECT_LT(std::abs(a - b), 4.0 * std::sqrt(a + b)) << i << "<->" << j;
    }
  }
  EXPECT_GE(pairs, 6);
}

TEST(EndToEnd, SmokeN1Gaussian) {
  const auto d = sn1d_dataset(1.0, 16);
  const auto spec = prior(PriorKind::gaussian, 1.5, 1.0);
  SamplerConfig c;
  c.iterations = 5000;
  c.burn_in = 2000;
  c.adapt_window = 100;
  const auto r = run_chain(c, PosteriorModel(spec, d.data), 17);
  EXPECT_LT(rel_l1_sn1d(posterior_mean(spec, r.samples)), 0.6);
}

// n=64: the posterior mean beats the prior mean in at least 95% of replicates.
TEST(EndToEnd, DataImprovesOnPrior) {
  const auto spec = prior(PriorKind::gaussian, 1.5, 64.0);
  Rng prior_rng(18);
  std::vector<std::vector<double>> prior_draws;
  for (int i = 0; i < 200; ++i) {
    auto c = sample_prior(spec, prior_rng).coeffs.coeffs;
    for (double& v : c) v *= rescale_factor(spec);
    prior_draws.push_back(std::move(c));
  }
  const double prior_err = rel_l1_sn1d(posterior_mean(spec, prior_draws));
  int better = 0;
  const int reps = 20;
  for (int rep = 0; rep < reps; ++rep) {
    const auto d = sn1d_dataset(64.0, 100 + rep);
    SamplerConfig c;
    c.iterations = 1500;
    c.burn_in = 1000;
    c.adapt_window = 50;
    const auto r = run_chain(c, PosteriorModel(spec, d.data), 200 + rep);
    if (rel_l1_sn1d(posterior_mean(spec, r.samples)) < prior_err) ++better;
  }
  EXPECT_GE(better, 19);
}

TEST(Files, TraceAndSamplesCsv) {
  const auto model = PosteriorModel::flat(prior(PriorKind::gaussian, 1.5, 1.0, 4));
  auto c = fixed_step(0.1, 20, 10, 5);
  c.hyper = HyperConfig{};
  const auto r = run_chain(c, model, 3);
  const auto dir = std::filesystem::temp_directory_path() / "covbayes_sampler_test";
  std::filesystem::create_directories(dir);
  write_trace_csv((dir / "trace.csv").string(), r);
  write_samples_csv((dir / "samples.csv").string(), r);
  std::ifstream t(dir / "trace.csv"), s(dir / "samples.csv");
  std::string line;
  std::getline(t, line);
  EXPECT_EQ(line, "iter,loglik,alpha,accepted,b");
  int rows = 0;
  while (std::getline(t, line)) ++rows;
  EXPECT_EQ(rows, 20);
  std::getline(s, line);
  EXPECT_EQ(line, "c1,c2,c3,c4,alpha");
  std::getline(s, line);
  EXPECT_EQ(std::count(line.begin(), line.end(), ','), 4);
  EXPECT_NEAR(std::stod(line.substr(0, line.find(','))), r.samples[0][0], 1e-15 * std::abs(r.samples[0][0]) + 1e-300);
}
