#include "covbayes/priors.hpp"

#include <algorithm>
#include <cmath>
#include <memory>
#include <numbers>

#include "covbayes/stats.hpp"

namespace covbayes {

double LinkFunction::operator()(double t) const {
  switch (kind) {
    case LinkKind::exponential:
      return std::exp(t);
    case LinkKind::sigmoid:
      return t >= 0.0 ? scale / (1.0 + std::exp(-t)) : scale * std::exp(t) / (1.0 + std::exp(t));
    case LinkKind::softplus:
      return scale * (t > 30.0 ? t + std::log1p(std::exp(-t)) : std::log1p(std::exp(t)));
  }
  return 0.0;
}

double LinkFunction::capped(double t, bool& was_capped) const {
  const double v = (*this)(t);
  if (v > kCap) {
    was_capped = true;
    return kCap;
  }
  return v;
}

LinkKind parse_link(const std::string& name) {
  if (name == "exponential" || name == "exp") return LinkKind::exponential;
  if (name == "sigmoid" || name == "sigmoid_scaled") return LinkKind::sigmoid;
  if (name == "softplus" || name == "softplus_scaled") return LinkKind::softplus;
  throw ConfigError("unknown link '" + name + "'");
}

std::string link_name(LinkKind k) {
  switch (k) {
    case LinkKind::exponential: return "exponential";
    case LinkKind::sigmoid: return "sigmoid";
    case LinkKind::softplus: return "softplus";
  }
  return "?";
}

PriorKind parse_prior_kind(const std::string& name) {
  if (name == "gaussian") return PriorKind::gaussian;
  if (name == "besov_laplace" || name == "laplace") return PriorKind::besov_laplace;
  throw ConfigError("unknown prior kind '" + name + "'");
}

std::string prior_kind_name(PriorKind k) {
  return k == PriorKind::gaussian ? "gaussian" : "besov_laplace";
}

void PriorSpec::validate() const {
  if (!(alpha > 0.0)) throw ConfigError("prior alpha must be positive");
  if (!(n > 0.0)) throw ConfigError("window volume n must be positive");
  if (d != 1 && d != 2) throw ConfigError("covariate dimension must be 1 or 2");
  if (!(link.scale > 0.0)) throw ConfigError("link scale must be positive");
  if (!(laplace_scale > 0.0)) throw ConfigError("laplace_scale must be positive");
  if (wavelet != "symmlet8" && wavelet != "haar") throw ConfigError("unknown wavelet '" + wavelet + "'");
  level();
}

WaveletBasis PriorSpec::basis() const {
  return wavelet == "haar" ? WaveletBasis::haar(d, boundary) : WaveletBasis::symmlet8(d, boundary);
}

int PriorSpec::level() const {
  if (truncation < 1) throw ConfigError("truncation must be >= 1");
  for (int J = 0; J <= (d == 1 ? 20 : 10); ++J) {
    const std::size_t count = std::size_t{1} << (J * d);
    if (count == truncation) return J;
    if (count > truncation) break;
  }
  throw ConfigError("truncation " + std::to_string(truncation) + " is not 2^(J d) for d=" +
                    std::to_string(d));
}

double rescale_factor(const PriorSpec& spec, double alpha) {
  const double d = spec.d;
  const double expo = spec.kind == PriorKind::gaussian ? d / (4.0 * alpha + 2.0 * d) : d / (2.0 * alpha + d);
  return std::pow(spec.n, -expo);
}

double rescale_factor(const PriorSpec& spec) { return rescale_factor(spec, spec.alpha); }

double coefficient_weight(const PriorSpec& spec, std::size_t ell, double alpha) {
  const double l = static_cast<double>(ell);
  const double expo = spec.kind == PriorKind::gaussian ? alpha / spec.d : alpha / spec.d - 0.5;
  return std::pow(l, -expo);
}

double coefficient_weight(const PriorSpec& spec, std::size_t ell) {
  return coefficient_weight(spec, ell, spec.alpha);
}

double laplace_whitening(double w) {
  if (w == 0.0 || std::isnan(w)) return 0.0;
  // 2 - 2 Phi(x) = erfc(x / sqrt 2)
  const double t = -log_erfc(std::abs(w) / std::numbers::sqrt2);
  return w > 0.0 ? t : -t;
}

double whiten_transform(const PriorSpec& spec, std::size_t ell, double w) {
  return rescale_factor(spec) * coefficient_weight(spec, ell) * spec.laplace_scale * laplace_whitening(w);
}

std::vector<double> transform_whitened(const PriorSpec& spec, std::span<const double> xi,
                                       double alpha) {
  const double r = rescale_factor(spec, alpha);
  std::vector<double> omega(xi.size());
  const double expo = spec.kind == PriorKind::gaussian ? alpha / spec.d : alpha / spec.d - 0.5;
  if (spec.kind == PriorKind::gaussian) {
    for (std::size_t i = 0; i < xi.size(); ++i) {
      omega[i] = r * std::pow(static_cast<double>(i + 1), -expo) * xi[i];
    }
  } else {
    const double s = r * spec.laplace_scale;
    for (std::size_t i = 0; i < xi.size(); ++i) {
      omega[i] = s * std::pow(static_cast<double>(i + 1), -expo) * laplace_whitening(xi[i]);
    }
  }
  return omega;
}

std::vector<double> transform_whitened(const PriorSpec& spec, std::span<const double> xi) {
  return transform_whitened(spec, xi, spec.alpha);
}

PriorDraw sample_prior(const PriorSpec& spec, Rng& rng) {
  spec.validate();
  std::normal_distribution<double> nd;
  std::vector<double> w(spec.truncation);
  for (double& x : w) x = nd(rng);
  std::vector<double> c(w.size());
  for (std::size_t i = 0; i < w.size(); ++i) {
    c[i] = spec.kind == PriorKind::gaussian ? coefficient_weight(spec, i + 1) * w[i]
                                            : whiten_transform(spec, i + 1, w[i]);
  }
  return PriorDraw{CoefficientVector(spec.basis(), std::move(c)), std::move(w)};
}

RealizedIntensity::RealizedIntensity(SeriesGrid grid, LinkFunction link)
    : grid_(std::move(grid)), link_(link) {
  double hi = -INFINITY;
  for (double v : grid_.values()) hi = std::max(hi, v);
  capped_ = link_(hi) > LinkFunction::kCap;
}

double RealizedIntensity::series(const Vec2& z) const {
  Vec2 c = z;
  for (int a = 0; a < grid_.dimension(); ++a) c[a] = std::clamp(std::isnan(z[a]) ? 0.0 : z[a], 0.0, 1.0);
  return grid_(c);
}

double RealizedIntensity::operator()(const Vec2& z) const {
  return std::min(link_(series(z)), LinkFunction::kCap);
}

IntensityFn RealizedIntensity::function() const {
  auto self = std::make_shared<RealizedIntensity>(*this);
  return [self](const Vec2& z) { return (*self)(z); };
}

RealizedIntensity realize_function(const PriorSpec& spec, std::span<const double> omega) {
  SeriesSynthesizer synth(spec.basis(), spec.level());
  return RealizedIntensity(synth.synthesize(omega), spec.link);
}

RealizedIntensity realize_intensity(const PriorSpec& spec, const CoefficientVector& coeffs) {
  if (spec.kind == PriorKind::besov_laplace) return realize_function(spec, coeffs.coeffs);
  const double r = rescale_factor(spec);
  std::vector<double> omega(coeffs.coeffs);
  for (double& v : omega) v *= r;
  return realize_function(spec, omega);
}

}  // namespace covbayes
