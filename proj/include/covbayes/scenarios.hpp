#pragma once

#include <functional>
#include <string>

#include "covbayes/common.hpp"

namespace covbayes {

enum class ScenarioId { sn1d, blocks1d, sn2d, blockspike2d };

ScenarioId parse_scenario(const std::string& name);  // throws ConfigError
std::string scenario_name(ScenarioId id);

// Azzalini skew-normal densities.
double skew_normal_pdf(double z, double location, double scale, double shape);
double skew_normal2_pdf(const Vec2& z, const Vec2& location, double variance, const Vec2& shape);

double eval_sn1d(double z);
double eval_blocks1d(double z);
double eval_sn2d(const Vec2& z);
double eval_blockspike2d(const Vec2& z);

struct GroundTruth {
  ScenarioId id = ScenarioId::sn1d;
  int d = 1;
  double l1_norm_reference = 0.0;  // published norm of the truth on [0,1]^d

  double operator()(const Vec2& z) const;
  IntensityFn function() const;
};

GroundTruth ground_truth(ScenarioId id);

// ||rho_0||_{L1([0,1]^d)}: exact for blocks1d, midpoint rule on 10^4 nodes
// (d=1) or 400^2 nodes (d=2) otherwise.
double l1_norm_numeric(const GroundTruth& truth);

}  // namespace covbayes
