#pragma once

// pCN, whitened pCN and Metropolis-within-Gibbs samplers for the wavelet
// priors. Chain states hold the whitened coordinates xi and the function
// coefficients omega = T_alpha(xi), so rho = link(sum omega_l psi_l).

#include <functional>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "covbayes/pointproc.hpp"
#include "covbayes/priors.hpp"

namespace covbayes {

// Log-likelihood of the coefficient vector omega. Either the point process
// likelihood through a cached wavelet synthesis, or an arbitrary function
// (flat likelihood for prior-invariance checks, toy targets).
class PosteriorModel {
 public:
  using CustomLikelihood = std::function<double(std::span<const double>)>;

  PosteriorModel(PriorSpec spec, const LikelihoodData& data, int extra_levels = -1);
  PosteriorModel(PriorSpec spec, CustomLikelihood loglik);
  static PosteriorModel flat(PriorSpec spec);

  const PriorSpec& spec() const { return spec_; }
  std::size_t dimension() const { return spec_.truncation; }

  // Non-finite values are passed through; callers treat them as rejection.
  double log_likelihood(std::span<const double> omega) const;
  // Same, and reports whether the link hit LinkFunction::kCap anywhere.
  double log_likelihood(std::span<const double> omega, bool& capped) const;

  std::vector<double> transform(std::span<const double> xi, double alpha) const;
  // Per-coefficient multiplier r(alpha) l^{-alpha/d} (times the Laplace scale).
  std::vector<double> scales(double alpha) const;

 private:
  PriorSpec spec_;
  CustomLikelihood custom_;
  std::shared_ptr<const SeriesSynthesizer> synth_;
  std::vector<Stencil> data_stencils_;
  std::vector<Stencil> quad_stencils_;
  std::vector<double> quad_weights_;
  std::vector<double> base_scales_;  // scales(spec.alpha)
};

struct HyperConfig {
  double rate = 1.0;        // Exp(rate) hyperprior on alpha
  double step = 0.2;        // random-walk scale c
  double alpha_init = 1.0;
};

struct SamplerConfig {
  double b = 0.05;
  std::size_t iterations = 5000;
  std::size_t burn_in = 2000;
  std::size_t thin = 10;
  bool adapt = true;
  std::size_t adapt_window = 200;
  double target_low = 0.20;
  double target_high = 0.30;
  std::optional<HyperConfig> hyper;

  // Throws ConfigError unless 0 < b < 1/2, burn_in < iterations, thin >= 1.
  // allow_zero_step admits b == 0 (degenerate kernel, tests only).
  void validate(bool allow_zero_step = false) const;
};

struct ChainState {
  std::vector<double> whitened;
  std::vector<double> transformed;
  double alpha = 0.0;
  double log_lik = 0.0;
  bool alpha_floored = false;
  std::size_t capped_proposals = 0;  // proposals whose intensity hit the link cap
};

// Cold start: xi = 0, omega = 0.
ChainState initial_state(const PosteriorModel& model, const SamplerConfig& config);

// Recomputes omega and log_lik from (xi, alpha); returns the largest
// discrepancy against the cached values.
double revalidate(const PosteriorModel& model, const ChainState& state);

constexpr double kAlphaFloor = 1e-6;

bool pcn_step(ChainState& state, const PosteriorModel& model, double b, Rng& rng);
bool wpcn_step(ChainState& state, const PosteriorModel& model, double b, Rng& rng);

struct MwgOutcome {
  bool accepted_xi = false;
  bool accepted_alpha = false;
};
MwgOutcome mwg_step(ChainState& state, const PosteriorModel& model, double b,
                    const HyperConfig& hyper, Rng& rng);

double hyperprior_log_density(double alpha, double rate);

// Window rule applied during burn-in.
double adapt_step_size(double window_acceptance, double b, double low = 0.20, double high = 0.30);

struct TraceRecord {
  std::size_t iter = 0;
  double loglik = 0.0;
  double alpha = 0.0;
  bool accepted = false;
  double b = 0.0;
  bool alpha_accepted = false;
  bool alpha_floored = false;
};

struct ChainResult {
  std::vector<std::vector<double>> samples;  // omega after burn-in and thinning
  std::vector<double> sample_alpha;
  std::vector<TraceRecord> trace;
  std::size_t accepted_count = 0;
  double acceptance_rate = 0.0;
  double post_burn_in_acceptance = 0.0;
  double alpha_acceptance_rate = 0.0;  // hierarchical runs only
  double final_b = 0.0;
  std::size_t capped_proposals = 0;
  bool hierarchical = false;

  // Acceptance over consecutive post-burn-in windows of the given length.
  std::vector<double> windowed_acceptance(std::size_t burn_in, std::size_t window) const;
};

// Picks pCN for Gaussian and wpCN for Besov-Laplace priors, MWG when
// config.hyper is set.
ChainResult run_chain(const SamplerConfig& config, const PosteriorModel& model, std::uint64_t seed,
                      bool allow_zero_step = false);

void write_trace_csv(const std::string& path, const ChainResult& r);
void write_samples_csv(const std::string& path, const ChainResult& r);

}  // namespace covbayes
