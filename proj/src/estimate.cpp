#include "covbayes/estimate.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <memory>

#include "covbayes/stats.hpp"
#include "json.hpp"

namespace covbayes {

namespace {

Vec2 clamp_unit(const Vec2& z, int d) {
  Vec2 c{0.0, 0.0};
  for (int a = 0; a < d; ++a) c[a] = std::clamp(std::isnan(z[a]) ? 0.0 : z[a], 0.0, 1.0);
  return c;
}

// Midpoints of a regular partition of [0,1]^d, equal weights.
std::vector<Vec2> unit_midpoints(int d, std::size_t per_axis) {
  std::vector<Vec2> out;
  const double h = 1.0 / static_cast<double>(per_axis);
  if (d == 1) {
    out.reserve(per_axis);
    for (std::size_t i = 0; i < per_axis; ++i) out.push_back({(i + 0.5) * h, 0.0});
    return out;
  }
  out.reserve(per_axis * per_axis);
  for (std::size_t i = 0; i < per_axis; ++i)
    for (std::size_t j = 0; j < per_axis; ++j) out.push_back({(i + 0.5) * h, (j + 0.5) * h});
  return out;
}

std::string fmt(double v) {
  char buf[32];
  auto [end, ec] = std::to_chars(buf, buf + sizeof buf, v, std::chars_format::general, 10);
  return std::string(buf, end);
}

void check_d(int d) {
  if (d != 1 && d != 2) throw ConfigError("covariate dimension must be 1 or 2");
}

}  // namespace

EvalGrid make_eval_grid(int d, std::size_t per_axis) {
  check_d(d);
  EvalGrid g;
  g.d = d;
  g.per_axis = per_axis ? per_axis : (d == 1 ? 512 : 128);
  if (g.per_axis < 2) throw ConfigError("evaluation grid needs at least 2 points per axis");
  const double h = 1.0 / static_cast<double>(g.per_axis - 1);
  if (d == 1) {
    for (std::size_t i = 0; i < g.per_axis; ++i) g.points.push_back({i * h, 0.0});
  } else {
    for (std::size_t i = 0; i < g.per_axis; ++i)
      for (std::size_t j = 0; j < g.per_axis; ++j) g.points.push_back({i * h, j * h});
  }
  return g;
}

PosteriorSummary summarize(const std::vector<std::vector<double>>& samples, const PriorSpec& spec,
                           const EvalGrid& grid, double level) {
  if (samples.size() < 2) throw ConfigError("summarize needs at least 2 samples");
  if (!(level > 0.0 && level < 1.0)) throw ConfigError("credible level must lie in (0,1)");
  if (grid.d != spec.d) throw ConfigError("evaluation grid dimension differs from the prior");
  const std::size_t m = grid.points.size();
  const std::size_t s = samples.size();

  SeriesSynthesizer synth(spec.basis(), spec.level());
  std::vector<double> vals(m * s);  // point-major
  for (std::size_t k = 0; k < s; ++k) {
    if (samples[k].size() != spec.truncation) throw FormatError("sample length differs from truncation");
    const RealizedIntensity rho(synth.synthesize(samples[k]), spec.link);
    for (std::size_t i = 0; i < m; ++i) vals[i * s + k] = rho(grid.points[i]);
  }

  PosteriorSummary out;
  out.grid = grid;
  out.level = level;
  out.mean.resize(m);
  out.lower.resize(m);
  out.upper.resize(m);
  const double qlo = 0.5 * (1.0 - level), qhi = 0.5 * (1.0 + level);
  for (std::size_t i = 0; i < m; ++i) {
    std::span<double> v(vals.data() + i * s, s);
    out.mean[i] = mean(v);
    std::sort(v.begin(), v.end());
    out.lower[i] = quantile_sorted(v, qlo);
    out.upper[i] = quantile_sorted(v, qhi);
  }
  return out;
}

PosteriorSummary summarize(const std::vector<std::vector<double>>& samples, const PriorSpec& spec,
                           double level) {
  return summarize(samples, spec, make_eval_grid(spec.d), level);
}

PosteriorMean::PosteriorMean(const std::vector<std::vector<double>>& samples, const PriorSpec& spec) {
  if (samples.empty()) throw ConfigError("posterior mean of an empty sample");
  SeriesSynthesizer synth(spec.basis(), spec.level());
  std::vector<double> acc;
  for (const auto& w : samples) {
    if (w.size() != spec.truncation) throw FormatError("sample length differs from truncation");
    SeriesGrid g = synth.synthesize(w);
    if (acc.empty()) {
      acc.assign(g.values().size(), 0.0);
      grid_ = g;
    }
    const auto& v = g.values();
    for (std::size_t i = 0; i < v.size(); ++i) acc[i] += std::min(spec.link(v[i]), LinkFunction::kCap);
  }
  for (double& a : acc) a /= static_cast<double>(samples.size());
  grid_.values() = std::move(acc);
}

double PosteriorMean::operator()(const Vec2& z) const { return grid_(clamp_unit(z, grid_.dimension())); }

IntensityFn PosteriorMean::function() const {
  auto self = std::make_shared<PosteriorMean>(*this);
  return [self](const Vec2& z) { return (*self)(z); };
}

double SpatialIntensity::integral() const {
  auto axis_w = [&](int a, std::size_t i) {
    const std::size_t n = grid.shape[a];
    if (n == 1) return 1.0;
    return (i == 0 || i + 1 == n) ? 0.5 * grid.spacing[a] : grid.spacing[a];
  };
  double sum = 0.0;
  for (std::size_t i = 0; i < grid.shape[0]; ++i)
    for (std::size_t j = 0; j < grid.shape[1]; ++j)
      sum += axis_w(0, i) * (window.D == 2 ? axis_w(1, j) : 1.0) * values[i * grid.shape[1] + j];
  return sum;
}

SpatialIntensity plug_in_spatial(const IntensityFn& mean_rho, const CovariateField& field) {
  SpatialIntensity out{field.window, field.grid, {}};
  out.values.resize(field.node_count());
  for (std::size_t i = 0; i < field.node_count(); ++i) out.values[i] = mean_rho(field.node_value(i));
  return out;
}

double relative_l1_error(const IntensityFn& est, const IntensityFn& truth, int d, ErrorMeasure measure,
                         const CovariateField* field) {
  check_d(d);
  std::vector<Vec2> nodes;
  if (measure == ErrorMeasure::lebesgue) {
    nodes = unit_midpoints(d, d == 1 ? 10000 : 400);
  } else {
    if (!field) throw ConfigError("nu_z error needs the covariate field");
    const auto q = make_quadrature(field->window, field->window.D == 1 ? 10000 : 160000);
    nodes.reserve(q.nodes.size());
    for (const auto& x : q.nodes) nodes.push_back(eval_covariate(*field, x));
  }
  // Equal weights in both cases: midpoint cells have equal size.
  double num = 0.0, den = 0.0;
  for (const auto& z : nodes) {
    const double t = truth(z);
    num += std::abs(est(z) - t);
    den += std::abs(t);
  }
  if (!(den > 0.0)) throw NumericError("truth has zero L1 norm");
  return num / den;
}

Vec2 silverman_bandwidth(std::span<const Vec2> z, int d) {
  check_d(d);
  Vec2 h{0.1, d == 2 ? 0.1 : 0.0};
  if (z.size() < 2) return h;
  for (int a = 0; a < d; ++a) {
    std::vector<double> v;
    v.reserve(z.size());
    for (const auto& p : z) v.push_back(p[a]);
    const double sd = sample_sd(v);
    std::sort(v.begin(), v.end());
    const double iqr = quantile_sorted(v, 0.75) - quantile_sorted(v, 0.25);
    const double spread = iqr > 0.0 ? std::min(sd, iqr / 1.34) : sd;
    const double bw = 0.9 * spread * std::pow(static_cast<double>(z.size()), -0.2);
    if (bw > 1e-10 && std::isfinite(bw)) h[a] = bw;
  }
  return h;
}

KernelEstimate::KernelEstimate(const PointPattern& pattern, const CovariateField& field,
                               const KernelOptions& opts) {
  const int d = field.d;
  check_d(d);
  const std::size_t per_axis = opts.per_axis ? opts.per_axis : (d == 1 ? 1024 : 128);
  const auto table_nodes = unit_midpoints(d, per_axis);
  std::vector<double> table(table_nodes.size(), 0.0);

  std::vector<Vec2> zk;
  zk.reserve(pattern.count());
  for (const auto& x : pattern.points) zk.push_back(eval_covariate(field, x));
  h_ = opts.bandwidth ? *opts.bandwidth : silverman_bandwidth(zk, d);
  for (int a = 0; a < d; ++a)
    if (!(h_[a] > 0.0)) throw ConfigError("kernel bandwidth must be positive");

  if (!zk.empty()) {
    const auto q = make_quadrature(field.window, opts.quad_nodes ? opts.quad_nodes : (d == 1 ? 10000 : 2500));
    std::vector<Vec2> zq;
    zq.reserve(q.nodes.size());
    for (const auto& x : q.nodes) zq.push_back(eval_covariate(field, x));

    double norm = 1.0;
    for (int a = 0; a < d; ++a) norm /= std::sqrt(2.0 * M_PI) * h_[a];
    auto kernel = [&](const Vec2& u, const Vec2& v) {
      double e = 0.0;
      for (int a = 0; a < d; ++a) {
        const double t = (u[a] - v[a]) / h_[a];
        e += t * t;
      }
      return norm * std::exp(-0.5 * e);
    };
    for (std::size_t i = 0; i < table_nodes.size(); ++i) {
      const Vec2& z = table_nodes[i];
      double den = 0.0;
      for (std::size_t j = 0; j < zq.size(); ++j) den += q.weights[j] * kernel(z, zq[j]);
      if (den < 1e-12) continue;
      double num = 0.0;
      for (const auto& p : zk) num += kernel(z, p);
      table[i] = num / den;
    }
  }
  table_ = SeriesGrid(std::move(table), per_axis, d, Boundary::symmetric, 0.5);
}

double KernelEstimate::operator()(const Vec2& z) const { return table_(clamp_unit(z, table_.dimension())); }

IntensityFn KernelEstimate::function() const {
  auto self = std::make_shared<KernelEstimate>(*this);
  return [self](const Vec2& z) { return (*self)(z); };
}

void write_summary_csv(const std::string& path, const PosteriorSummary& s) {
  std::ofstream os(path);
  if (!os) throw FormatError("cannot write " + path);
  os << (s.grid.d == 2 ? "z1,z2,mean,lower,upper\n" : "z1,mean,lower,upper\n");
  for (std::size_t i = 0; i < s.mean.size(); ++i) {
    const auto& z = s.grid.points[i];
    os << fmt(z[0]) << ',';
    if (s.grid.d == 2) os << fmt(z[1]) << ',';
    os << fmt(s.mean[i]) << ',' << fmt(s.lower[i]) << ',' << fmt(s.upper[i]) << '\n';
  }
}

std::string metrics_json(const RunMetrics& m) {
  nlohmann::ordered_json j;
  j["scenario"] = m.scenario;
  j["n"] = m.n;
  j["prior"] = m.prior;
  j["alpha"] = m.alpha;
  if (std::isfinite(m.rel_l1)) {
    j["rel_l1"] = m.rel_l1;
  } else {
    j["rel_l1"] = nullptr;  // no ground truth
  }
  j["acc_rate"] = m.acc_rate;
  j["runtime_s"] = m.runtime_s;
  j["seed"] = m.seed;
  return j.dump(2);
}

void write_metrics_json(const std::string& path, const RunMetrics& m) {
  std::ofstream os(path);
  if (!os) throw FormatError("cannot write " + path);
  os << metrics_json(m) << '\n';
}

RunMetrics read_metrics_json(const std::string& path) {
  std::ifstream is(path);
  if (!is) throw FormatError("cannot read " + path);
  try {
    const auto j = nlohmann::json::parse(is);
    RunMetrics m;
    m.scenario = j.at("scenario").get<std::string>();
    m.n = j.at("n").get<double>();
    m.prior = j.at("prior").get<std::string>();
    m.alpha = j.at("alpha").get<double>();
    m.rel_l1 = j.at("rel_l1").is_null() ? std::nan("") : j.at("rel_l1").get<double>();
    m.acc_rate = j.at("acc_rate").get<double>();
    m.runtime_s = j.at("runtime_s").get<double>();
    m.seed = j.at("seed").get<std::uint64_t>();
    return m;
  } catch (const nlohmann::json::exception& e) {
    throw FormatError(path + ": " + e.what());
  }
}

}  // namespace covbayes
