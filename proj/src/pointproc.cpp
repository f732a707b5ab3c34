#include "covbayes/pointproc.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <limits>
#include <sstream>

#include "json.hpp"

namespace covbayes {

double QuadratureRule::total_weight() const {
  double s = 0.0;
  for (double w : weights) s += w;
  return s;
}

QuadratureRule make_quadrature(const Window& w, std::size_t max_nodes) {
  const std::size_t min_nodes = w.D == 1 ? 4 : 16;
  if (max_nodes < min_nodes) throw ConfigError("quadrature needs at least 4^D nodes");
  std::array<std::size_t, 2> m{max_nodes, 1};
  if (w.D == 2) {
    // Cells as close to square as the node cap allows.
    const double ratio = w.side(0) / w.side(1);
    auto m0 = static_cast<std::size_t>(std::floor(std::sqrt(static_cast<double>(max_nodes) * ratio)));
    m0 = std::clamp<std::size_t>(m0, 1, max_nodes);
    m = {m0, max_nodes / m0};
  }
  QuadratureRule q;
  const double h0 = w.side(0) / static_cast<double>(m[0]);
  const double h1 = w.D == 2 ? w.side(1) / static_cast<double>(m[1]) : 1.0;
  const double cell = h0 * h1;
  q.nodes.reserve(m[0] * m[1]);
  for (std::size_t a = 0; a < m[0]; ++a) {
    for (std::size_t b = 0; b < m[1]; ++b) {
      Vec2 x{w.lower[0] + (static_cast<double>(a) + 0.5) * h0, 0.0};
      if (w.D == 2) x[1] = w.lower[1] + (static_cast<double>(b) + 0.5) * h1;
      q.nodes.push_back(x);
    }
  }
  q.weights.assign(q.nodes.size(), cell);
  return q;
}

ThinningResult simulate_cox_thinning(const IntensityFn& rho, const CovariateField& field,
                                     std::uint64_t seed) {
  ThinningResult out;
  out.pattern.window = field.window;
  double grid_max = 0.0;
  for (std::size_t i = 0; i < field.node_count(); ++i) {
    const double r = rho(field.node_value(i));
    if (std::isnan(r)) throw NumericError("intensity returned NaN");
    grid_max = std::max(grid_max, r);
  }
  out.lambda_max = 1.05 * grid_max;
  if (out.lambda_max <= 0.0) return out;
  if (!std::isfinite(out.lambda_max)) throw NumericError("intensity bound is not finite");

  Rng rng(seed);
  const Window& w = field.window;
  std::poisson_distribution<std::size_t> count(out.lambda_max * w.volume());
  std::uniform_real_distribution<double> u(0.0, 1.0);
  const std::size_t k = count(rng);
  for (std::size_t i = 0; i < k; ++i) {
    Vec2 x{w.lower[0] + w.side(0) * u(rng), 0.0};
    if (w.D == 2) x[1] = w.lower[1] + w.side(1) * u(rng);
    double p = rho(eval_covariate(field, x)) / out.lambda_max;
    if (p > 1.0) {
      ++out.violations;
      p = 1.0;
    }
    if (u(rng) < p) out.pattern.points.push_back(x);
  }
  return out;
}

LikelihoodData::LikelihoodData(const PointPattern& pattern, const CovariateField& field,
                               const QuadratureRule& quad)
    : quad_w_(quad.weights), d_(field.d) {
  data_z_.reserve(pattern.count());
  for (const Vec2& x : pattern.points) data_z_.push_back(eval_covariate(field, x));
  quad_z_.reserve(quad.nodes.size());
  for (const Vec2& x : quad.nodes) quad_z_.push_back(eval_covariate(field, x));
}

double LikelihoodData::log_likelihood(std::span<const double> rho_data,
                                      std::span<const double> rho_quad) const {
  double s = 0.0;
  for (double r : rho_data) {
    if (std::isnan(r)) throw NumericError("intensity returned NaN");
    if (r <= 0.0) return -std::numeric_limits<double>::infinity();
    s += std::log(r);
  }
  double q = 0.0;
  for (std::size_t i = 0; i < rho_quad.size(); ++i) {
    if (std::isnan(rho_quad[i])) throw NumericError("intensity returned NaN");
    q += quad_w_[i] * (rho_quad[i] - 1.0);
  }
  return s - q;
}

double LikelihoodData::log_likelihood(const IntensityFn& rho) const {
  std::vector<double> rd(data_z_.size()), rq(quad_z_.size());
  for (std::size_t i = 0; i < rd.size(); ++i) rd[i] = rho(data_z_[i]);
  for (std::size_t i = 0; i < rq.size(); ++i) rq[i] = rho(quad_z_[i]);
  return log_likelihood(rd, rq);
}

double log_likelihood(const IntensityFn& rho, const PointPattern& pattern,
                      const CovariateField& field, const QuadratureRule& quad) {
  return LikelihoodData(pattern, field, quad).log_likelihood(rho);
}

// ---------------------------------------------------------------------------
// Files

namespace {

std::string g17(double v) {
  char buf[32];
  const auto r = std::to_chars(buf, buf + sizeof buf, v, std::chars_format::general, 17);
  return std::string(buf, r.ptr);
}

double parse_double(const std::string& s, std::size_t row) {
  double v;
  const auto r = std::from_chars(s.data(), s.data() + s.size(), v);
  if (r.ec != std::errc() || r.ptr != s.data() + s.size() || !std::isfinite(v)) {
    throw FormatError("pattern row " + std::to_string(row) + ": bad number '" + s + "'");
  }
  return v;
}

std::string trim(std::string s) {
  const auto a = s.find_first_not_of(" \t\r");
  const auto b = s.find_last_not_of(" \t\r");
  return a == std::string::npos ? std::string() : s.substr(a, b - a + 1);
}

}  // namespace

void write_pattern(const std::string& csv_path, const std::string& json_path,
                   const PointPattern& p) {
  std::ofstream csv(csv_path);
  if (!csv) throw std::runtime_error("cannot write " + csv_path);
  csv << (p.window.D == 2 ? "x,y\n" : "x\n");
  for (const Vec2& x : p.points) {
    csv << g17(x[0]);
    if (p.window.D == 2) csv << ',' << g17(x[1]);
    csv << '\n';
  }
  nlohmann::json meta;
  meta["n"] = p.window.volume();
  meta["D"] = p.window.D;
  const Window sq = Window::square(p.window.volume(), p.window.D);
  if (sq.lower != p.window.lower || sq.upper != p.window.upper) {
    meta["lower"] = std::vector<double>(p.window.lower.begin(), p.window.lower.begin() + p.window.D);
    meta["upper"] = std::vector<double>(p.window.upper.begin(), p.window.upper.begin() + p.window.D);
  }
  std::ofstream js(json_path);
  if (!js) throw std::runtime_error("cannot write " + json_path);
  js << meta.dump(2) << '\n';
}

PointPattern read_pattern(const std::string& csv_path, const std::string& json_path) {
  std::ifstream js(json_path);
  if (!js) throw DataError("cannot open pattern metadata " + json_path);
  nlohmann::json meta;
  try {
    js >> meta;
  } catch (const nlohmann::json::exception& e) {
    throw FormatError("pattern metadata: " + std::string(e.what()));
  }
  if (!meta.contains("n") || !meta.contains("D")) throw FormatError("pattern metadata needs n and D");
  PointPattern p;
  try {
    const int D = meta.at("D").get<int>();
    if (meta.contains("lower") && meta.contains("upper")) {
      const auto lo = meta.at("lower").get<std::vector<double>>();
      const auto hi = meta.at("upper").get<std::vector<double>>();
      if (lo.size() != static_cast<std::size_t>(D) || hi.size() != lo.size()) {
        throw FormatError("pattern metadata: lower/upper need D entries");
      }
      p.window = Window::box({lo[0], D == 2 ? lo[1] : 0.0}, {hi[0], D == 2 ? hi[1] : 0.0}, D);
    } else {
      p.window = Window::square(meta.at("n").get<double>(), D);
    }
  } catch (const nlohmann::json::exception& e) {
    throw FormatError("pattern metadata: " + std::string(e.what()));
  } catch (const ConfigError& e) {
    throw FormatError("pattern metadata: " + std::string(e.what()));
  }

  std::ifstream csv(csv_path);
  if (!csv) throw DataError("cannot open pattern " + csv_path);
  std::string line;
  if (!std::getline(csv, line)) throw FormatError("pattern file is empty");
  const std::string header = trim(line);
  const int D = p.window.D;
  if (header != (D == 2 ? "x,y" : "x")) {
    throw FormatError("pattern header '" + header + "' does not match D=" + std::to_string(D));
  }
  std::size_t row = 0, outside = 0;
  std::string first_outside;
  while (std::getline(csv, line)) {
    ++row;
    line = trim(line);
    if (line.empty()) continue;
    std::vector<std::string> cols;
    std::stringstream ss(line);
    std::string c;
    while (std::getline(ss, c, ',')) cols.push_back(trim(c));
    if (cols.size() != static_cast<std::size_t>(D)) {
      throw FormatError("pattern row " + std::to_string(row) + ": expected " + std::to_string(D) +
                        " columns");
    }
    Vec2 x{parse_double(cols[0], row), D == 2 ? parse_double(cols[1], row) : 0.0};
    if (!p.window.contains(x, 1e-12)) {
      if (outside++ == 0) first_outside = "row " + std::to_string(row);
      continue;
    }
    p.points.push_back(x);
  }
  if (outside > 0) {
    throw DataError(std::to_string(outside) + " point(s) outside the window, first at " + first_outside);
  }
  return p;
}

}  // namespace covbayes
