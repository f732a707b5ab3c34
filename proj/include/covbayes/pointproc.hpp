#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "covbayes/common.hpp"
#include "covbayes/covfield.hpp"

namespace covbayes {

struct PointPattern {
  Window window;
  std::vector<Vec2> points;

  std::size_t count() const { return points.size(); }
};

struct QuadratureRule {
  std::vector<Vec2> nodes;
  std::vector<double> weights;

  double total_weight() const;
};

// Midpoint rule on the largest regular grid with at most max_nodes nodes.
// Throws ConfigError if max_nodes < 4^D.
QuadratureRule make_quadrature(const Window& w, std::size_t max_nodes);

struct ThinningResult {
  PointPattern pattern;
  double lambda_max = 0.0;
  std::size_t violations = 0;  // retention probabilities clamped to 1
};

// Inhomogeneous Poisson pattern with intensity rho(Z(x)) on field.window.
ThinningResult simulate_cox_thinning(const IntensityFn& rho, const CovariateField& field,
                                     std::uint64_t seed);

// Covariate values at the data points and quadrature nodes, computed once
// per dataset. The log-likelihood is
//   sum_k ln rho(z_k) - sum_q w_q (rho(z_q) - 1),
// which is exactly 0 for rho == 1 and differs from the textbook form only by
// the constant sum_q w_q - vol(W).
class LikelihoodData {
 public:
  LikelihoodData() = default;
  LikelihoodData(const PointPattern& pattern, const CovariateField& field,
                 const QuadratureRule& quad);

  const std::vector<Vec2>& data_covariates() const { return data_z_; }
  const std::vector<Vec2>& quad_covariates() const { return quad_z_; }
  const std::vector<double>& quad_weights() const { return quad_w_; }
  int covariate_dim() const { return d_; }

  double log_likelihood(const IntensityFn& rho) const;
  // rho already evaluated at data_covariates() / quad_covariates().
  double log_likelihood(std::span<const double> rho_data, std::span<const double> rho_quad) const;

 private:
  std::vector<Vec2> data_z_;
  std::vector<Vec2> quad_z_;
  std::vector<double> quad_w_;
  int d_ = 1;
};

// -inf if rho <= 0 at a data point; NumericError if rho returns NaN.
double log_likelihood(const IntensityFn& rho, const PointPattern& pattern,
                      const CovariateField& field, const QuadratureRule& quad);

// CSV `x[,y]` plus sibling JSON `{"n": vol, "D": dim}`. Box windows carry
// optional "lower"/"upper" arrays.
void write_pattern(const std::string& csv_path, const std::string& json_path,
                   const PointPattern& p);
// Throws FormatError on malformed files and DataError for points outside the window.
PointPattern read_pattern(const std::string& csv_path, const std::string& json_path);

}  // namespace covbayes
