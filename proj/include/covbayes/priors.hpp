#pragma once

// Rescaled Gaussian wavelet-series and Besov-Laplace priors.
//
// Every prior is parametrized through whitened coordinates xi (iid N(0,1)).
// The function inside the link is W = sum_l omega_l psi_l with omega = T(xi):
//   gaussian:      omega_l = r_n(alpha) l^{-alpha/d} xi_l
//   besov_laplace: omega_l = r_n(alpha) l^{-(alpha/d - 1/2)} s sgn(xi_l) (-ln erfc(|xi_l|/sqrt2))
// with r_n the n-dependent rescaling and s the Laplace scale (default 1).

#include <span>
#include <string>
#include <vector>

#include "covbayes/common.hpp"
#include "covbayes/wavelet.hpp"

namespace covbayes {

enum class LinkKind { exponential, sigmoid, softplus };

struct LinkFunction {
  static constexpr double kCap = 1e12;

  LinkKind kind = LinkKind::exponential;
  double scale = 1.0;  // sigmoid: maximum intensity; softplus: slope

  double operator()(double t) const;
  // Same, with values above kCap replaced by kCap and `capped` set.
  double capped(double t, bool& capped) const;
};

LinkKind parse_link(const std::string& name);
std::string link_name(LinkKind k);

enum class PriorKind { gaussian, besov_laplace };

PriorKind parse_prior_kind(const std::string& name);
std::string prior_kind_name(PriorKind k);

struct PriorSpec {
  PriorKind kind = PriorKind::gaussian;
  double alpha = 1.5;
  std::size_t truncation = 1024;
  LinkFunction link;
  int d = 1;
  double n = 1.0;
  double laplace_scale = 1.0;
  std::string wavelet = "symmlet8";  // or "haar"
  Boundary boundary = Boundary::symmetric;

  // Throws ConfigError for alpha <= 0, n <= 0, or a non-dyadic truncation.
  void validate() const;
  WaveletBasis basis() const;
  int level() const;  // finest resolution J with 2^{J d} == truncation
};

double rescale_factor(const PriorSpec& spec);
double rescale_factor(const PriorSpec& spec, double alpha);
double coefficient_weight(const PriorSpec& spec, std::size_t ell);
double coefficient_weight(const PriorSpec& spec, std::size_t ell, double alpha);

// sgn(w) (-ln(2 - 2 Phi(|w|))): maps N(0,1) onto the standard Laplace law.
double laplace_whitening(double w);

double whiten_transform(const PriorSpec& spec, std::size_t ell, double w);

// omega = T_alpha(xi) for either prior kind.
std::vector<double> transform_whitened(const PriorSpec& spec, std::span<const double> xi,
                                       double alpha);
std::vector<double> transform_whitened(const PriorSpec& spec, std::span<const double> xi);

struct PriorDraw {
  CoefficientVector coeffs;  // gaussian: l^{-alpha/d} w (not rescaled); laplace: T(w)
  std::vector<double> whitened;
};

PriorDraw sample_prior(const PriorSpec& spec, Rng& rng);

// rho = link(sum c_l psi_l) tabulated on a fine grid, evaluated by
// interpolation of the series followed by the link.
class RealizedIntensity {
 public:
  RealizedIntensity(SeriesGrid grid, LinkFunction link);

  double operator()(const Vec2& z) const;
  // Series value before the link.
  double series(const Vec2& z) const;
  bool capped() const { return capped_; }
  const SeriesGrid& grid() const { return grid_; }
  IntensityFn function() const;

 private:
  SeriesGrid grid_;
  LinkFunction link_;
  bool capped_ = false;
};

// Base-draw convention: gaussian coefficients are multiplied by the
// rescaling, Laplace coefficients already contain it.
RealizedIntensity realize_intensity(const PriorSpec& spec, const CoefficientVector& coeffs);

// omega already in function scale (chain states and stored samples).
RealizedIntensity realize_function(const PriorSpec& spec, std::span<const double> omega);

}  // namespace covbayes
