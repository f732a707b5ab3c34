#include "covbayes/scenarios.hpp"

#include <array>
#include <cmath>
#include <numbers>

#include "covbayes/stats.hpp"

namespace covbayes {

namespace {

double sgn(double x) { return static_cast<double>((x > 0.0) - (x < 0.0)); }

constexpr std::array<double, 6> kBlockHeights{3.0, -4.0, 3.1, -2.2, 3.1, -3.0};
constexpr std::array<double, 6> kBlockStarts{0.1, 0.15, 0.25, 0.40, 0.71, 0.81};

}  // namespace

ScenarioId parse_scenario(const std::string& name) {
  if (name == "sn1d") return ScenarioId::sn1d;
  if (name == "blocks1d") return ScenarioId::blocks1d;
  if (name == "sn2d") return ScenarioId::sn2d;
  if (name == "blockspike2d") return ScenarioId::blockspike2d;
  throw ConfigError("unknown scenario '" + name + "'");
}

std::string scenario_name(ScenarioId id) {
  switch (id) {
    case ScenarioId::sn1d: return "sn1d";
    case ScenarioId::blocks1d: return "blocks1d";
    case ScenarioId::sn2d: return "sn2d";
    case ScenarioId::blockspike2d: return "blockspike2d";
  }
  return "?";
}

double skew_normal_pdf(double z, double location, double scale, double shape) {
  const double t = (z - location) / scale;
  return 2.0 / scale * normal_pdf(t) * normal_cdf(shape * t);
}

double skew_normal2_pdf(const Vec2& z, const Vec2& location, double variance, const Vec2& shape) {
  const double r0 = z[0] - location[0], r1 = z[1] - location[1];
  const double phi2 = std::exp(-0.5 * (r0 * r0 + r1 * r1) / variance) / (2.0 * std::numbers::pi * variance);
  const double s = std::sqrt(variance);
  return 2.0 * phi2 * normal_cdf((shape[0] * r0 + shape[1] * r1) / s);
}

double eval_sn1d(double z) { return 100.0 * skew_normal_pdf(z, 0.8, 0.3, -5.0); }

double eval_blocks1d(double z) {
  double s = 1.01;
  for (std::size_t m = 0; m < kBlockHeights.size(); ++m) {
    s += kBlockHeights[m] * 0.5 * (1.0 + sgn(z - kBlockStarts[m]));
  }
  return 100.0 / 1.64 * s;
}

double eval_sn2d(const Vec2& z) { return 100.0 * skew_normal2_pdf(z, {0.4, 0.6}, 0.05, {3.0, -2.0}); }

// The block factor is the indicator of (b, c) (1/2 on edges, 1/4 at corners):
// each axis contributes (1 + sgn)(1 - sgn) / 4. Read literally the printed
// product is 8 inside the block, which puts the L1 norm near 500 rather than
// the intended 100; the indicator reading gives 101.2.
double eval_blockspike2d(const Vec2& z) {
  constexpr Vec2 b{0.1, 0.2}, c{0.3, 0.5}, u{0.7, 0.8};
  constexpr double w = 0.1, height = 20.0, amplitude = 4.0;
  double block = 1.0;
  for (int h = 0; h < 2; ++h) block *= 0.25 * (1.0 + sgn(z[h] - b[h])) * (1.0 - sgn(z[h] - c[h]));
  const double r = std::hypot(z[0] - u[0], z[1] - u[1]) / w;
  const double spike = std::pow(1.0 + r, -4.0);
  return 100.0 / 0.42 * (amplitude * block + height * spike);
}

double GroundTruth::operator()(const Vec2& z) const {
  switch (id) {
    case ScenarioId::sn1d: return eval_sn1d(z[0]);
    case ScenarioId::blocks1d: return eval_blocks1d(z[0]);
    case ScenarioId::sn2d: return eval_sn2d(z);
    case ScenarioId::blockspike2d: return eval_blockspike2d(z);
  }
  return 0.0;
}

IntensityFn GroundTruth::function() const {
  const GroundTruth self = *this;
  return [self](const Vec2& z) { return self(z); };
}

GroundTruth ground_truth(ScenarioId id) {
  GroundTruth t;
  t.id = id;
  switch (id) {
    case ScenarioId::sn1d: t.d = 1; t.l1_norm_reference = 99.23; break;
    case ScenarioId::blocks1d: t.d = 1; t.l1_norm_reference = 100.96; break;
    case ScenarioId::sn2d: t.d = 2; t.l1_norm_reference = 100.0; break;
    case ScenarioId::blockspike2d: t.d = 2; t.l1_norm_reference = 100.0; break;
  }
  return t;
}

double l1_norm_numeric(const GroundTruth& truth) {
  if (truth.id == ScenarioId::blocks1d) {
    double s = 1.01;
    for (std::size_t m = 0; m < kBlockHeights.size(); ++m) s += kBlockHeights[m] * (1.0 - kBlockStarts[m]);
    return 100.0 / 1.64 * s;
  }
  if (truth.d == 1) {
    constexpr int n = 10000;
    double s = 0.0;
    for (int i = 0; i < n; ++i) s += std::abs(truth({(i + 0.5) / n, 0.0}));
    return s / n;
  }
  constexpr int n = 400;
  double s = 0.0;
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < n; ++j) s += std::abs(truth({(i + 0.5) / n, (j + 0.5) / n}));
  }
  return s / (n * n);
}

}  // namespace covbayes
