#include "covbayes/covfield.hpp"

#include <fftw3.h>

#include <Eigen/Cholesky>
#include <Eigen/Dense>
#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <istream>
#include <limits>
#include <mutex>
#include <ostream>
#include <sstream>

#include "covbayes/stats.hpp"

namespace covbayes {

namespace {

// FFTW planning is not thread-safe; execution on distinct arrays is.
std::mutex& fftw_planner_mutex() {
  static std::mutex m;
  return m;
}

std::size_t nice_fft_size(std::size_t n) {
  for (std::size_t m = std::max<std::size_t>(n, 1);; ++m) {
    std::size_t r = m;
    for (std::size_t p : {2, 3, 5}) {
      while (r % p == 0) r /= p;
    }
    if (r == 1) return m;
  }
}

double se_kernel(double r2, double lengthscale) {
  return std::exp(-0.5 * r2 / (lengthscale * lengthscale));
}

struct Embedding {
  std::array<std::size_t, 2> size{1, 1};
  std::vector<double> sqrt_eigen;  // sqrt(max(lambda, 0) / M)
};

bool try_embedding(const GridLayout& g, double lengthscale, std::array<std::size_t, 2> size,
                   Embedding& out) {
  const std::size_t total = size[0] * size[1];
  fftw_complex* buf = fftw_alloc_complex(total);
  for (std::size_t a = 0; a < size[0]; ++a) {
    const double la = static_cast<double>(std::min(a, size[0] - a)) * g.spacing[0];
    for (std::size_t b = 0; b < size[1]; ++b) {
      const double lb = static_cast<double>(std::min(b, size[1] - b)) * g.spacing[1];
      buf[a * size[1] + b][0] = se_kernel(la * la + lb * lb, lengthscale);
      buf[a * size[1] + b][1] = 0.0;
    }
  }
  fftw_plan plan;
  {
    std::lock_guard lock(fftw_planner_mutex());
    const int dims[2] = {static_cast<int>(size[0]), static_cast<int>(size[1])};
    plan = fftw_plan_dft(size[1] == 1 ? 1 : 2, dims, buf, buf, FFTW_FORWARD, FFTW_ESTIMATE);
  }
  fftw_execute(plan);
  double lmax = 0.0, lmin = 0.0;
  for (std::size_t i = 0; i < total; ++i) {
    lmax = std::max(lmax, buf[i][0]);
    lmin = std::min(lmin, buf[i][0]);
  }
  const bool ok = lmin >= -1e-8 * lmax;
  if (ok) {
    out.size = size;
    out.sqrt_eigen.resize(total);
    for (std::size_t i = 0; i < total; ++i) {
      out.sqrt_eigen[i] = std::sqrt(std::max(buf[i][0], 0.0) / static_cast<double>(total));
    }
  }
  {
    std::lock_guard lock(fftw_planner_mutex());
    fftw_destroy_plan(plan);
  }
  fftw_free(buf);
  return ok;
}

std::vector<double> sample_circulant(const GridLayout& g, const Embedding& emb, Rng& rng) {
  const std::size_t total = emb.size[0] * emb.size[1];
  fftw_complex* buf = fftw_alloc_complex(total);
  std::normal_distribution<double> nd;
  for (std::size_t i = 0; i < total; ++i) {
    buf[i][0] = emb.sqrt_eigen[i] * nd(rng);
    buf[i][1] = emb.sqrt_eigen[i] * nd(rng);
  }
  fftw_plan plan;
  {
    std::lock_guard lock(fftw_planner_mutex());
    const int dims[2] = {static_cast<int>(emb.size[0]), static_cast<int>(emb.size[1])};
    plan = fftw_plan_dft(emb.size[1] == 1 ? 1 : 2, dims, buf, buf, FFTW_FORWARD, FFTW_ESTIMATE);
  }
  fftw_execute(plan);
  std::vector<double> values(g.node_count());
  for (std::size_t a = 0; a < g.shape[0]; ++a) {
    for (std::size_t b = 0; b < g.shape[1]; ++b) {
      values[a * g.shape[1] + b] = buf[a * emb.size[1] + b][0];
    }
  }
  {
    std::lock_guard lock(fftw_planner_mutex());
    fftw_destroy_plan(plan);
  }
  fftw_free(buf);
  return values;
}

std::vector<double> sample_cholesky(const GridLayout& g, double lengthscale, Rng& rng) {
  const std::size_t n = g.node_count();
  if (n > 6000) throw NumericError("GP field: Cholesky fallback too large for this grid");
  Eigen::MatrixXd cov(n, n);
  for (std::size_t i = 0; i < n; ++i) {
    const double ai = static_cast<double>(i / g.shape[1]) * g.spacing[0];
    const double bi = static_cast<double>(i % g.shape[1]) * g.spacing[1];
    for (std::size_t j = 0; j <= i; ++j) {
      const double da = ai - static_cast<double>(j / g.shape[1]) * g.spacing[0];
      const double db = bi - static_cast<double>(j % g.shape[1]) * g.spacing[1];
      cov(i, j) = cov(j, i) = se_kernel(da * da + db * db, lengthscale);
    }
    cov(i, i) += 1e-10;
  }
  Eigen::LLT<Eigen::MatrixXd> llt(cov);
  if (llt.info() != Eigen::Success) throw NumericError("GP field: Cholesky fallback failed");
  Eigen::VectorXd z(n);
  std::normal_distribution<double> nd;
  for (std::size_t i = 0; i < n; ++i) z[i] = nd(rng);
  const Eigen::VectorXd x = llt.matrixL() * z;
  return std::vector<double>(x.data(), x.data() + n);
}

std::size_t flat_node(const GridLayout& g, std::size_t a, std::size_t b) {
  return a * g.shape[1] + b;
}

double to_index(double x, double lower, double spacing, std::size_t m) {
  if (m <= 1) return 0.0;
  return std::clamp((x - lower) / spacing, 0.0, static_cast<double>(m - 1));
}

}  // namespace

// ---------------------------------------------------------------------------
// Window / grid

Window Window::square(double n, int D) {
  if (!(n > 0.0)) throw ConfigError("window volume must be positive");
  if (D != 1 && D != 2) throw ConfigError("window dimension must be 1 or 2");
  const double half = 0.5 * std::pow(n, 1.0 / D);
  Window w;
  w.D = D;
  w.lower = {-half, D == 2 ? -half : 0.0};
  w.upper = {half, D == 2 ? half : 0.0};
  return w;
}

Window Window::box(const Vec2& lower, const Vec2& upper, int D) {
  if (D != 1 && D != 2) throw ConfigError("window dimension must be 1 or 2");
  for (int a = 0; a < D; ++a) {
    if (!(upper[a] > lower[a])) throw ConfigError("window bounds must be increasing");
  }
  Window w;
  w.D = D;
  w.lower = {lower[0], D == 2 ? lower[1] : 0.0};
  w.upper = {upper[0], D == 2 ? upper[1] : 0.0};
  return w;
}

double Window::volume() const { return D == 1 ? side(0) : side(0) * side(1); }

bool Window::contains(const Vec2& x, double tol) const {
  for (int a = 0; a < D; ++a) {
    const double slack = tol * std::max(1.0, side(a));
    if (!(x[a] >= lower[a] - slack && x[a] <= upper[a] + slack)) return false;
  }
  return true;
}

GridLayout make_grid_layout(const Window& w, double nodes_per_unit, std::size_t max_per_axis) {
  if (!(nodes_per_unit > 0.0)) throw ConfigError("grid resolution must be positive");
  GridLayout g;
  for (int a = 0; a < w.D; ++a) {
    const double cells = std::round(w.side(a) * nodes_per_unit);
    auto m = static_cast<std::size_t>(std::max(cells, 1.0)) + 1;
    m = std::clamp<std::size_t>(m, 2, std::max<std::size_t>(max_per_axis, 2));
    g.shape[a] = m;
    g.spacing[a] = w.side(a) / static_cast<double>(m - 1);
  }
  return g;
}

std::size_t default_max_per_axis(int D) { return D == 2 ? 400 : 1u << 20; }

Vec2 CovariateField::node_value(std::size_t node) const {
  Vec2 v{0.0, 0.0};
  for (int c = 0; c < d; ++c) v[c] = values[node * d + c];
  return v;
}

Vec2 CovariateField::node_position(std::size_t node) const {
  const std::size_t a = node / grid.shape[1], b = node % grid.shape[1];
  Vec2 p{window.lower[0] + static_cast<double>(a) * grid.spacing[0], 0.0};
  if (window.D == 2) p[1] = window.lower[1] + static_cast<double>(b) * grid.spacing[1];
  return p;
}

// ---------------------------------------------------------------------------
// Gaussian fields

RawField simulate_gp_field(const Window& w, const GridLayout& grid, double lengthscale,
                           std::uint64_t seed, std::size_t max_embedding) {
  if (!(lengthscale > 0.0)) throw ConfigError("lengthscale must be positive");
  RawField out;
  out.window = w;
  out.grid = grid;
  for (int a = 0; a < w.D; ++a) {
    if (grid.spacing[a] > 0.5 * lengthscale) {
      out.warnings.push_back("grid resolution below 2 nodes per lengthscale");
      break;
    }
  }
  Rng rng(seed);

  std::array<std::size_t, 2> size{1, 1};
  for (int a = 0; a < w.D; ++a) size[a] = nice_fft_size(2 * (grid.shape[a] - 1));
  Embedding emb;
  bool ok = false;
  while (size[0] * size[1] <= max_embedding) {
    if ((ok = try_embedding(grid, lengthscale, size, emb))) break;
    for (int a = 0; a < w.D; ++a) size[a] = nice_fft_size(2 * size[a]);
  }
  if (ok) {
    out.values = sample_circulant(grid, emb, rng);
  } else {
    out.values = sample_cholesky(grid, lengthscale, rng);
    out.cholesky_fallback = true;
  }
  return out;
}

RawField simulate_gp_field(const Window& w, double nodes_per_unit, double lengthscale,
                           std::uint64_t seed) {
  return simulate_gp_field(w, make_grid_layout(w, nodes_per_unit, default_max_per_axis(w.D)),
                           lengthscale, seed);
}

CovariateField gaussian_cdf_transform(const std::vector<RawField>& components) {
  if (components.empty() || components.size() > 2) {
    throw ConfigError("covariate dimension must be 1 or 2");
  }
  const RawField& first = components.front();
  CovariateField f;
  f.window = first.window;
  f.grid = first.grid;
  f.d = static_cast<int>(components.size());
  f.interpolation = Interpolation::bilinear;
  const std::size_t n = first.values.size();
  f.values.resize(n * f.d);
  for (int c = 0; c < f.d; ++c) {
    const RawField& r = components[c];
    if (r.values.size() != n || r.grid.shape != first.grid.shape) {
      throw ConfigError("covariate components must share one grid");
    }
    for (std::size_t i = 0; i < n; ++i) f.values[i * f.d + c] = normal_cdf(r.values[i]);
    f.cholesky_fallback = f.cholesky_fallback || r.cholesky_fallback;
    for (const auto& msg : r.warnings) {
      if (std::find(f.warnings.begin(), f.warnings.end(), msg) == f.warnings.end()) {
        f.warnings.push_back(msg);
      }
    }
  }
  return f;
}

CovariateField gaussian_cdf_transform(const RawField& raw) {
  return gaussian_cdf_transform(std::vector<RawField>{raw});
}

CovariateField simulate_gaussian_covariate(const Window& w, const GridLayout& grid,
                                           const std::vector<double>& lengthscales,
                                           std::uint64_t seed) {
  std::vector<RawField> comps;
  for (std::size_t c = 0; c < lengthscales.size(); ++c) {
    comps.push_back(simulate_gp_field(w, grid, lengthscales[c], derive_seed(seed, {c})));
  }
  return gaussian_cdf_transform(comps);
}

// ---------------------------------------------------------------------------
// Voronoi fields

MarginalSampler uniform_marginal(int d) {
  return [d](Rng& rng) {
    std::uniform_real_distribution<double> u(0.0, 1.0);
    Vec2 v{u(rng), 0.0};
    if (d == 2) v[1] = u(rng);
    return v;
  };
}

CovariateField simulate_voronoi_field(const Window& w, const GridLayout& grid,
                                      const VoronoiOptions& opts, std::uint64_t seed,
                                      VoronoiSeeds* seeds_out) {
  if (!(opts.intensity > 0.0)) throw ConfigError("Voronoi seed intensity must be positive");
  if (opts.d != 1 && opts.d != 2) throw ConfigError("covariate dimension must be 1 or 2");
  Rng rng(seed);
  const int D = w.D;
  const double cell = std::pow(opts.intensity, -1.0 / D);
  const double pad = opts.padding * cell;
  Vec2 lo{w.lower[0] - pad, D == 2 ? w.lower[1] - pad : 0.0};
  Vec2 hi{w.upper[0] + pad, D == 2 ? w.upper[1] + pad : 0.0};
  double padded_volume = hi[0] - lo[0];
  if (D == 2) padded_volume *= hi[1] - lo[1];

  std::vector<Vec2> seeds;
  std::uniform_real_distribution<double> u(0.0, 1.0);
  auto uniform_point = [&] {
    Vec2 p{lo[0] + (hi[0] - lo[0]) * u(rng), 0.0};
    if (D == 2) p[1] = lo[1] + (hi[1] - lo[1]) * u(rng);
    return p;
  };
  std::poisson_distribution<std::size_t> count_dist(opts.intensity * padded_volume);
  for (int attempt = 0; attempt <= opts.max_retries && seeds.empty(); ++attempt) {
    const std::size_t k = count_dist(rng);
    for (std::size_t i = 0; i < k; ++i) seeds.push_back(uniform_point());
  }
  if (seeds.empty()) seeds.push_back(uniform_point());

  const MarginalSampler marginal = opts.marginal ? opts.marginal : uniform_marginal(opts.d);
  std::vector<Vec2> marks(seeds.size());
  for (auto& m : marks) m = marginal(rng);
  if (seeds_out) *seeds_out = {seeds, marks};

  // Bucket grid with roughly one seed per bucket.
  std::array<long, 2> nb{1, 1};
  constexpr long kMaxBuckets = 1 << 11;
  for (int a = 0; a < D; ++a) {
    nb[a] = std::clamp(static_cast<long>(std::ceil((hi[a] - lo[a]) / cell)), 1L, kMaxBuckets);
  }
  const Vec2 bsize{(hi[0] - lo[0]) / nb[0], D == 2 ? (hi[1] - lo[1]) / nb[1] : 1.0};
  auto bucket_of = [&](const Vec2& p, int a) {
    return std::clamp(static_cast<long>(std::floor((p[a] - lo[a]) / bsize[a])), 0L, nb[a] - 1);
  };
  std::vector<std::vector<std::size_t>> buckets(nb[0] * nb[1]);
  for (std::size_t i = 0; i < seeds.size(); ++i) {
    buckets[bucket_of(seeds[i], 0) * nb[1] + (D == 2 ? bucket_of(seeds[i], 1) : 0)].push_back(i);
  }
  const double min_bucket = D == 2 ? std::min(bsize[0], bsize[1]) : bsize[0];
  const long max_ring = std::max(nb[0], nb[1]);

  CovariateField f;
  f.window = w;
  f.grid = grid;
  f.d = opts.d;
  f.interpolation = Interpolation::nearest;
  f.values.resize(grid.node_count() * opts.d);
  for (std::size_t node = 0; node < grid.node_count(); ++node) {
    const Vec2 x = f.node_position(node);
    const long b0 = bucket_of(x, 0), b1 = D == 2 ? bucket_of(x, 1) : 0;
    double best = std::numeric_limits<double>::infinity();
    std::size_t arg = 0;
    auto scan = [&](long i0, long i1) {
      if (i0 < 0 || i0 >= nb[0] || i1 < 0 || i1 >= nb[1]) return;
      for (std::size_t s : buckets[i0 * nb[1] + i1]) {
        const double dx = seeds[s][0] - x[0], dy = seeds[s][1] - x[1];
        const double dist = dx * dx + dy * dy;
        if (dist < best) {
          best = dist;
          arg = s;
        }
      }
    };
    for (long r = 0; r <= max_ring; ++r) {
      if (D == 1) {
        scan(b0 - r, 0);
        if (r > 0) scan(b0 + r, 0);
      } else {
        for (long i = -r; i <= r; ++i) {
          scan(b0 + i, b1 - r);
          if (r > 0) scan(b0 + i, b1 + r);
        }
        for (long j = -r + 1; j <= r - 1; ++j) {
          scan(b0 - r, b1 + j);
          scan(b0 + r, b1 + j);
        }
      }
      const double reach = static_cast<double>(r) * min_bucket;
      if (best <= reach * reach) break;
    }
    for (int c = 0; c < opts.d; ++c) f.values[node * opts.d + c] = std::clamp(marks[arg][c], 0.0, 1.0);
  }
  return f;
}

// ---------------------------------------------------------------------------
// Evaluation

Vec2 eval_covariate(const CovariateField& field, const Vec2& x) {
  if (!field.window.contains(x, 1e-12)) throw std::domain_error("point outside the field window");
  const GridLayout& g = field.grid;
  const double u0 = to_index(x[0], field.window.lower[0], g.spacing[0], g.shape[0]);
  const double u1 = field.window.D == 2
                        ? to_index(x[1], field.window.lower[1], g.spacing[1], g.shape[1])
                        : 0.0;
  Vec2 out{0.0, 0.0};
  if (field.interpolation == Interpolation::nearest) {
    const auto a = static_cast<std::size_t>(std::lround(u0));
    const auto b = static_cast<std::size_t>(std::lround(u1));
    out = field.node_value(flat_node(g, a, b));
  } else {
    const auto a = std::min(static_cast<std::size_t>(u0), g.shape[0] > 1 ? g.shape[0] - 2 : 0);
    const auto b = std::min(static_cast<std::size_t>(u1), g.shape[1] > 1 ? g.shape[1] - 2 : 0);
    const double fa = g.shape[0] > 1 ? u0 - static_cast<double>(a) : 0.0;
    const double fb = g.shape[1] > 1 ? u1 - static_cast<double>(b) : 0.0;
    const std::size_t a1 = g.shape[0] > 1 ? a + 1 : a;
    const std::size_t b1 = g.shape[1] > 1 ? b + 1 : b;
    for (int c = 0; c < field.d; ++c) {
      auto v = [&](std::size_t i, std::size_t j) { return field.values[flat_node(g, i, j) * field.d + c]; };
      out[c] = (1 - fa) * ((1 - fb) * v(a, b) + fb * v(a, b1)) + fa * ((1 - fb) * v(a1, b) + fb * v(a1, b1));
    }
  }
  for (int c = 0; c < field.d; ++c) out[c] = std::clamp(out[c], 0.0, 1.0);
  return out;
}

ErgodicityResult ergodicity_diagnostic(const CovariateField& field,
                                       const std::function<double(const Vec2&)>& f,
                                       double reference) {
  const GridLayout& g = field.grid;
  const std::size_t c0 = g.shape[0] - 1;
  const std::size_t c1 = field.window.D == 2 ? g.shape[1] - 1 : 1;
  double sum = 0.0;
  for (std::size_t a = 0; a < c0; ++a) {
    for (std::size_t b = 0; b < c1; ++b) {
      Vec2 x{field.window.lower[0] + (static_cast<double>(a) + 0.5) * g.spacing[0], 0.0};
      if (field.window.D == 2) {
        x[1] = field.window.lower[1] + (static_cast<double>(b) + 0.5) * g.spacing[1];
      }
      sum += f(eval_covariate(field, x));
    }
  }
  ErgodicityResult r;
  r.spatial_average = sum / static_cast<double>(c0 * c1);
  r.deviation = std::abs(r.spatial_average - reference);
  return r;
}

// ---------------------------------------------------------------------------
// Raster I/O

namespace {

std::string format_g17(double v) {
  char buf[32];
  const auto res = std::to_chars(buf, buf + sizeof buf, v, std::chars_format::general, 17);
  return std::string(buf, res.ptr);
}

std::vector<double> parse_list(const std::string& s) {
  std::vector<double> out;
  std::stringstream ss(s);
  std::string item;
  while (std::getline(ss, item, ',')) {
    double v;
    const auto res = std::from_chars(item.data(), item.data() + item.size(), v);
    if (res.ec != std::errc() || res.ptr != item.data() + item.size()) {
      throw FormatError("raster: bad number '" + item + "'");
    }
    out.push_back(v);
  }
  return out;
}

}  // namespace

void write_raster(std::ostream& os, const CovariateField& field) {
  const int D = field.window.D;
  auto join = [&](auto get) {
    std::string s = format_g17(get(0));
    if (D == 2) s += "," + format_g17(get(1));
    return s;
  };
  os << "# raster D=" << D << " d=" << field.d << " shape="
     << join([&](int a) { return static_cast<double>(field.grid.shape[a]); })
     << " origin=" << join([&](int a) { return field.window.lower[a]; })
     << " spacing=" << join([&](int a) { return field.grid.spacing[a]; }) << " interp="
     << (field.interpolation == Interpolation::nearest ? "nearest" : "bilinear") << "\n";
  for (std::size_t node = 0; node < field.node_count(); ++node) {
    for (int c = 0; c < field.d; ++c) {
      if (c) os << ',';
      os << format_g17(field.values[node * field.d + c]);
    }
    os << '\n';
  }
}

CovariateField read_raster(std::istream& is, bool unit_range) {
  std::string header;
  if (!std::getline(is, header) || header.rfind("# raster", 0) != 0) {
    throw FormatError("raster: missing '# raster' header");
  }
  std::istringstream hs(header.substr(8));
  std::string tok;
  int D = 0, d = 0;
  std::vector<double> shape, origin, spacing;
  Interpolation interp = Interpolation::bilinear;
  while (hs >> tok) {
    const auto eq = tok.find('=');
    if (eq == std::string::npos) throw FormatError("raster: bad header token '" + tok + "'");
    const std::string key = tok.substr(0, eq), val = tok.substr(eq + 1);
    if (key == "D") {
      D = static_cast<int>(parse_list(val).at(0));
    } else if (key == "d") {
      d = static_cast<int>(parse_list(val).at(0));
    } else if (key == "shape") {
      shape = parse_list(val);
    } else if (key == "origin") {
      origin = parse_list(val);
    } else if (key == "spacing") {
      spacing = parse_list(val);
    } else if (key == "interp") {
      if (val == "nearest") {
        interp = Interpolation::nearest;
      } else if (val != "bilinear") {
        throw FormatError("raster: unknown interpolation '" + val + "'");
      }
    }
  }
  if ((D != 1 && D != 2) || (d != 1 && d != 2)) throw FormatError("raster: D and d must be 1 or 2");
  const auto uD = static_cast<std::size_t>(D);
  if (shape.size() != uD || origin.size() != uD || spacing.size() != uD) {
    throw FormatError("raster: shape/origin/spacing must have D entries");
  }
  CovariateField f;
  f.d = d;
  f.interpolation = interp;
  Vec2 lo{0.0, 0.0}, hi{0.0, 0.0};
  for (int a = 0; a < D; ++a) {
    if (!(shape[a] >= 2) || shape[a] != std::floor(shape[a]) || !(spacing[a] > 0.0)) {
      throw FormatError("raster: need >= 2 nodes and positive spacing per axis");
    }
    f.grid.shape[a] = static_cast<std::size_t>(shape[a]);
    f.grid.spacing[a] = spacing[a];
    lo[a] = origin[a];
    hi[a] = origin[a] + spacing[a] * (shape[a] - 1);
  }
  f.window = Window::box(lo, hi, D);
  f.values.reserve(f.node_count() * d);
  std::string line;
  std::size_t rows = 0;
  while (std::getline(is, line)) {
    if (line.empty()) continue;
    const auto vals = parse_list(line);
    if (vals.size() != static_cast<std::size_t>(d)) {
      throw FormatError("raster: row " + std::to_string(rows + 1) + " has wrong component count");
    }
    for (double v : vals) {
      if (!std::isfinite(v)) throw DataError("raster: non-finite cell in row " + std::to_string(rows + 1));
      if (unit_range && !(v >= 0.0 && v <= 1.0)) throw DataError("raster: covariate value outside [0,1]");
      f.values.push_back(v);
    }
    ++rows;
  }
  if (rows != f.node_count()) throw FormatError("raster: row count does not match shape");
  return f;
}

void write_raster_file(const std::string& path, const CovariateField& field) {
  std::ofstream os(path);
  if (!os) throw std::runtime_error("cannot write " + path);
  write_raster(os, field);
}

CovariateField read_raster_file(const std::string& path, bool unit_range) {
  std::ifstream is(path);
  if (!is) throw DataError("cannot open raster " + path);
  return read_raster(is, unit_range);
}

}  // namespace covbayes
