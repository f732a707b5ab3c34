#pragma once

#include <optional>
#include <span>
#include <string>
#include <vector>

#include "covbayes/covfield.hpp"
#include "covbayes/pointproc.hpp"
#include "covbayes/priors.hpp"

namespace covbayes {

// Regular grid on [0,1]^d including both endpoints, row-major (z1 slow).
struct EvalGrid {
  int d = 1;
  std::size_t per_axis = 0;
  std::vector<Vec2> points;
};

// per_axis == 0 picks 512 (d=1) or 128 (d=2).
EvalGrid make_eval_grid(int d, std::size_t per_axis = 0);

struct PosteriorSummary {
  EvalGrid grid;
  std::vector<double> mean;
  std::vector<double> lower;
  std::vector<double> upper;
  double level = 0.95;
};

// samples are chain outputs omega (see samplers.hpp). Bands are pointwise
// quantiles at (1 -+ level)/2 by linear interpolation of order statistics.
PosteriorSummary summarize(const std::vector<std::vector<double>>& samples, const PriorSpec& spec,
                           const EvalGrid& grid, double level = 0.95);
PosteriorSummary summarize(const std::vector<std::vector<double>>& samples, const PriorSpec& spec,
                           double level = 0.95);

// Posterior mean of rho tabulated on the synthesis grid (average of the
// linked sample grids), evaluated by (bi)linear interpolation.
class PosteriorMean {
 public:
  PosteriorMean(const std::vector<std::vector<double>>& samples, const PriorSpec& spec);
  double operator()(const Vec2& z) const;
  IntensityFn function() const;

 private:
  SeriesGrid grid_;
};

struct SpatialIntensity {
  Window window;
  GridLayout grid;
  std::vector<double> values;  // one per field node

  // Trapezoid rule over the node grid.
  double integral() const;
};

SpatialIntensity plug_in_spatial(const IntensityFn& mean_rho, const CovariateField& field);

enum class ErrorMeasure { lebesgue, nu_z };

// ||est - truth|| / ||truth||. Lebesgue: midpoint rule on [0,1]^d with 10^4
// nodes (d=1) or 400^2 (d=2). nu_z: the occupation measure of the covariate,
// i.e. a midpoint rule over field->window composed with the field, which
// must then be given.
double relative_l1_error(const IntensityFn& est, const IntensityFn& truth, int d,
                         ErrorMeasure measure = ErrorMeasure::lebesgue,
                         const CovariateField* field = nullptr);

// Silverman's rule of thumb, 0.9 min(sd, IQR/1.34) K^{-1/5}, per component.
Vec2 silverman_bandwidth(std::span<const Vec2> z, int d);

struct KernelOptions {
  std::optional<Vec2> bandwidth;  // Silverman when empty
  std::size_t quad_nodes = 0;     // window quadrature; 0 picks 10^4 (d=1) or 2500 (d=2)
  std::size_t per_axis = 0;       // tabulation grid; 0 picks 1024 (d=1) or 128 (d=2)
};

// rho(z) = sum_k k_h(z - Z(X_k)) / Q[k_h(z - Z(.))] with a product Gaussian
// kernel, tabulated and interpolated. Zero where the denominator < 1e-12.
class KernelEstimate {
 public:
  KernelEstimate(const PointPattern& pattern, const CovariateField& field, const KernelOptions& opts = {});
  double operator()(const Vec2& z) const;
  IntensityFn function() const;
  Vec2 bandwidth() const { return h_; }

 private:
  SeriesGrid table_;
  Vec2 h_{0.0, 0.0};
};

void write_summary_csv(const std::string& path, const PosteriorSummary& s);

struct RunMetrics {
  std::string scenario;
  double n = 0.0;
  std::string prior;
  double alpha = 0.0;
  double rel_l1 = 0.0;
  double acc_rate = 0.0;
  double runtime_s = 0.0;
  std::uint64_t seed = 0;
};

std::string metrics_json(const RunMetrics& m);
void write_metrics_json(const std::string& path, const RunMetrics& m);
RunMetrics read_metrics_json(const std::string& path);

}  // namespace covbayes
