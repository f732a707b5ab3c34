#include "covbayes/samplers.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <limits>

namespace covbayes {

namespace {

constexpr double kNegInf = -std::numeric_limits<double>::infinity();

double stencil_value(const Stencil& s, const std::vector<double>& v) {
  double t = 0.0;
  for (int i = 0; i < s.count; ++i) t += s.weight[i] * v[s.index[i]];
  return t;
}

void require_kind(const PosteriorModel& model, PriorKind kind, const char* sampler) {
  if (model.spec().kind != kind) {
    throw ConfigError(std::string(sampler) + " requires a " + prior_kind_name(kind) + " prior");
  }
}

bool metropolis(double log_ratio, Rng& rng) {
  if (std::isnan(log_ratio)) return false;
  std::uniform_real_distribution<double> u(0.0, 1.0);
  return std::log(u(rng)) < log_ratio;
}

std::string g17(double v) {
  char buf[32];
  const auto r = std::to_chars(buf, buf + sizeof buf, v, std::chars_format::general, 17);
  return std::string(buf, r.ptr);
}

}  // namespace

PosteriorModel::PosteriorModel(PriorSpec spec, const LikelihoodData& data, int extra_levels)
    : spec_(std::move(spec)), quad_weights_(data.quad_weights()) {
  spec_.validate();
  if (data.covariate_dim() != spec_.d) {
    throw ConfigError("prior dimension d=" + std::to_string(spec_.d) + " does not match covariate dimension " +
                      std::to_string(data.covariate_dim()));
  }
  synth_ = std::make_shared<SeriesSynthesizer>(spec_.basis(), spec_.level(), extra_levels);
  const SeriesGrid geom = synth_->geometry();
  for (const Vec2& z : data.data_covariates()) data_stencils_.push_back(geom.stencil(z));
  for (const Vec2& z : data.quad_covariates()) quad_stencils_.push_back(geom.stencil(z));
  base_scales_ = scales(spec_.alpha);
}

PosteriorModel::PosteriorModel(PriorSpec spec, CustomLikelihood loglik)
    : spec_(std::move(spec)), custom_(std::move(loglik)) {
  spec_.validate();
  base_scales_ = scales(spec_.alpha);
}

PosteriorModel PosteriorModel::flat(PriorSpec spec) {
  return PosteriorModel(std::move(spec), [](std::span<const double>) { return 0.0; });
}

double PosteriorModel::log_likelihood(std::span<const double> omega) const {
  bool capped = false;
  return log_likelihood(omega, capped);
}

double PosteriorModel::log_likelihood(std::span<const double> omega, bool& capped) const {
  if (custom_) return custom_(omega);
  const SeriesGrid grid = synth_->synthesize(omega);
  const auto& v = grid.values();
  const LinkFunction& link = spec_.link;
  double s = 0.0;
  for (const Stencil& st : data_stencils_) {
    const double r = link.capped(stencil_value(st, v), capped);
    if (!(r > 0.0)) return std::isnan(r) ? r : kNegInf;
    s += std::log(r);
  }
  double q = 0.0;
  for (std::size_t i = 0; i < quad_stencils_.size(); ++i) {
    q += quad_weights_[i] * (link.capped(stencil_value(quad_stencils_[i], v), capped) - 1.0);
  }
  return s - q;
}

std::vector<double> PosteriorModel::scales(double alpha) const {
  if (alpha == spec_.alpha && !base_scales_.empty()) return base_scales_;
  std::vector<double> out(spec_.truncation);
  const double r = rescale_factor(spec_, alpha);
  const double extra = spec_.kind == PriorKind::besov_laplace ? spec_.laplace_scale : 1.0;
  for (std::size_t i = 0; i < out.size(); ++i) {
    out[i] = r * extra * coefficient_weight(spec_, i + 1, alpha);
  }
  return out;
}

std::vector<double> PosteriorModel::transform(std::span<const double> xi, double alpha) const {
  const auto sc = scales(alpha);
  std::vector<double> omega(xi.size());
  if (spec_.kind == PriorKind::gaussian) {
    for (std::size_t i = 0; i < xi.size(); ++i) omega[i] = sc[i] * xi[i];
  } else {
    for (std::size_t i = 0; i < xi.size(); ++i) omega[i] = sc[i] * laplace_whitening(xi[i]);
  }
  return omega;
}

void SamplerConfig::validate(bool allow_zero_step) const {
  const bool b_ok = allow_zero_step ? (b >= 0.0 && b < 0.5) : (b > 0.0 && b < 0.5);
  if (!b_ok) throw ConfigError("step size b must lie in (0, 1/2)");
  if (iterations == 0 || burn_in >= iterations) throw ConfigError("burn_in must be smaller than iterations");
  if (thin == 0) throw ConfigError("thin must be >= 1");
  if (adapt && adapt_window == 0) throw ConfigError("adapt_window must be >= 1");
  if (hyper) {
    if (!(hyper->rate > 0.0)) throw ConfigError("hyperprior rate must be positive");
    if (!(hyper->step >= 0.0)) throw ConfigError("alpha step must be non-negative");
    if (!(hyper->alpha_init > 0.0)) throw ConfigError("alpha_init must be positive");
  }
}

ChainState initial_state(const PosteriorModel& model, const SamplerConfig& config) {
  ChainState s;
  s.whitened.assign(model.dimension(), 0.0);
  s.transformed.assign(model.dimension(), 0.0);
  s.alpha = config.hyper ? config.hyper->alpha_init : model.spec().alpha;
  s.log_lik = model.log_likelihood(s.transformed);
  return s;
}

double revalidate(const PosteriorModel& model, const ChainState& state) {
  const auto omega = model.transform(state.whitened, state.alpha);
  double worst = 0.0;
  for (std::size_t i = 0; i < omega.size(); ++i) {
    worst = std::max(worst, std::abs(omega[i] - state.transformed[i]));
  }
  const double ll = model.log_likelihood(state.transformed);
  if (ll != state.log_lik) worst = std::max(worst, std::abs(ll - state.log_lik));
  return worst;
}

bool pcn_step(ChainState& state, const PosteriorModel& model, double b, Rng& rng) {
  require_kind(model, PriorKind::gaussian, "pCN");
  const double keep = std::sqrt(1.0 - 2.0 * b), mix = std::sqrt(2.0 * b);
  const auto sc = model.scales(state.alpha);
  std::normal_distribution<double> nd;
  const std::size_t L = state.whitened.size();
  std::vector<double> xi(L), omega(L);
  for (std::size_t i = 0; i < L; ++i) {
    const double w = nd(rng);
    xi[i] = keep * state.whitened[i] + mix * w;
    omega[i] = keep * state.transformed[i] + mix * sc[i] * w;
  }
  bool capped = false;
  const double ll = model.log_likelihood(omega, capped);
  if (capped) ++state.capped_proposals;
  if (!std::isfinite(ll) && ll != kNegInf) return false;
  if (!metropolis(ll - state.log_lik, rng)) return false;
  state.whitened = std::move(xi);
  state.transformed = std::move(omega);
  state.log_lik = ll;
  return true;
}

bool wpcn_step(ChainState& state, const PosteriorModel& model, double b, Rng& rng) {
  require_kind(model, PriorKind::besov_laplace, "wpCN");
  const double keep = std::sqrt(1.0 - 2.0 * b), mix = std::sqrt(2.0 * b);
  std::normal_distribution<double> nd;
  std::vector<double> xi(state.whitened.size());
  for (std::size_t i = 0; i < xi.size(); ++i) xi[i] = keep * state.whitened[i] + mix * nd(rng);
  auto omega = model.transform(xi, state.alpha);
  bool capped = false;
  const double ll = model.log_likelihood(omega, capped);
  if (capped) ++state.capped_proposals;
  if (!std::isfinite(ll) && ll != kNegInf) return false;
  if (!metropolis(ll - state.log_lik, rng)) return false;
  state.whitened = std::move(xi);
  state.transformed = std::move(omega);
  state.log_lik = ll;
  return true;
}

double hyperprior_log_density(double alpha, double rate) {
  return alpha < 0.0 ? kNegInf : std::log(rate) - rate * alpha;
}

MwgOutcome mwg_step(ChainState& state, const PosteriorModel& model, double b,
                    const HyperConfig& hyper, Rng& rng) {
  MwgOutcome out;
  out.accepted_xi = model.spec().kind == PriorKind::gaussian ? pcn_step(state, model, b, rng)
                                                             : wpcn_step(state, model, b, rng);
  std::normal_distribution<double> nd;
  const double proposal = std::max(state.alpha + hyper.step * nd(rng), 0.0);
  if (proposal == state.alpha) {
    out.accepted_alpha = true;
    return out;
  }
  const bool floored = proposal < kAlphaFloor;
  const double a = floored ? kAlphaFloor : proposal;
  auto omega = model.transform(state.whitened, a);
  bool capped = false;
  const double ll = model.log_likelihood(omega, capped);
  if (capped) ++state.capped_proposals;
  if (!std::isfinite(ll) && ll != kNegInf) return out;
  const double log_ratio = ll - state.log_lik + hyperprior_log_density(a, hyper.rate) -
                           hyperprior_log_density(state.alpha, hyper.rate);
  if (!metropolis(log_ratio, rng)) return out;
  state.alpha = a;
  state.alpha_floored = floored;
  state.transformed = std::move(omega);
  state.log_lik = ll;
  out.accepted_alpha = true;
  return out;
}

double adapt_step_size(double window_acceptance, double b, double low, double high) {
  if (window_acceptance > high) b *= 1.25;
  else if (window_acceptance < low) b *= 0.8;
  return std::clamp(b, 1e-6, 0.499);
}

std::vector<double> ChainResult::windowed_acceptance(std::size_t burn_in, std::size_t window) const {
  std::vector<double> out;
  if (window == 0) return out;
  for (std::size_t start = burn_in; start + window <= trace.size(); start += window) {
    std::size_t acc = 0;
    for (std::size_t i = start; i < start + window; ++i) acc += trace[i].accepted ? 1 : 0;
    out.push_back(static_cast<double>(acc) / static_cast<double>(window));
  }
  return out;
}

ChainResult run_chain(const SamplerConfig& config, const PosteriorModel& model, std::uint64_t seed,
                      bool allow_zero_step) {
  config.validate(allow_zero_step);
  Rng rng(seed);
  ChainState state = initial_state(model, config);
  ChainResult res;
  res.hierarchical = config.hyper.has_value();
  res.trace.reserve(config.iterations);
  const std::size_t stored = (config.iterations - config.burn_in) / config.thin;
  res.samples.reserve(stored);

  double b = config.b;
  std::size_t window_acc = 0, post_acc = 0, alpha_acc = 0;
  for (std::size_t it = 1; it <= config.iterations; ++it) {
    TraceRecord rec;
    rec.iter = it;
    rec.b = b;
    if (config.hyper) {
      const auto o = mwg_step(state, model, b, *config.hyper, rng);
      rec.accepted = o.accepted_xi;
      rec.alpha_accepted = o.accepted_alpha;
      alpha_acc += o.accepted_alpha ? 1 : 0;
    } else if (model.spec().kind == PriorKind::gaussian) {
      rec.accepted = pcn_step(state, model, b, rng);
    } else {
      rec.accepted = wpcn_step(state, model, b, rng);
    }
    rec.loglik = state.log_lik;
    rec.alpha = state.alpha;
    rec.alpha_floored = state.alpha_floored;
    res.trace.push_back(rec);

    if (rec.accepted) {
      ++res.accepted_count;
      ++window_acc;
      if (it > config.burn_in) ++post_acc;
    }
    if (config.adapt && config.adapt_window > 0 && it % config.adapt_window == 0) {
      if (it <= config.burn_in) {
        const double rate = static_cast<double>(window_acc) / static_cast<double>(config.adapt_window);
        b = adapt_step_size(rate, b, config.target_low, config.target_high);
      }
      window_acc = 0;
    }
    if (it > config.burn_in && (it - config.burn_in) % config.thin == 0) {
      res.samples.push_back(state.transformed);
      res.sample_alpha.push_back(state.alpha);
    }
  }
  const double iters = static_cast<double>(config.iterations);
  res.acceptance_rate = static_cast<double>(res.accepted_count) / iters;
  res.post_burn_in_acceptance =
      static_cast<double>(post_acc) / static_cast<double>(config.iterations - config.burn_in);
  if (config.hyper) res.alpha_acceptance_rate = static_cast<double>(alpha_acc) / iters;
  res.final_b = b;
  res.capped_proposals = state.capped_proposals;
  return res;
}

void write_trace_csv(const std::string& path, const ChainResult& r) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write " + path);
  out << "iter,loglik,alpha,accepted,b\n";
  for (const auto& t : r.trace) {
    out << t.iter << ',' << g17(t.loglik) << ',' << g17(t.alpha) << ',' << (t.accepted ? 1 : 0) << ','
        << g17(t.b) << '\n';
  }
}

void write_samples_csv(const std::string& path, const ChainResult& r) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write " + path);
  const std::size_t L = r.samples.empty() ? 0 : r.samples.front().size();
  for (std::size_t i = 0; i < L; ++i) out << (i ? "," : "") << 'c' << (i + 1);
  if (r.hierarchical) out << ",alpha";
  out << '\n';
  for (std::size_t s = 0; s < r.samples.size(); ++s) {
    for (std::size_t i = 0; i < L; ++i) out << (i ? "," : "") << g17(r.samples[s][i]);
    if (r.hierarchical) out << ',' << g17(r.sample_alpha[s]);
    out << '\n';
  }
}

}  // namespace covbayes
