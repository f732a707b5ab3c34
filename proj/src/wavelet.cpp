#include "covbayes/wavelet.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <numbers>
#include <stdexcept>
#include <string>

namespace covbayes {

namespace {

bool is_power_of_two(std::size_t n) { return n != 0 && (n & (n - 1)) == 0; }

int log2_exact(std::size_t n) {
  int j = 0;
  while ((std::size_t{1} << j) < n) ++j;
  return j;
}

// Half-sample symmetric extension: ... x1 x0 | x0 x1 ... x_{N-1} | x_{N-1} ...
std::size_t reflect(long i, long n) {
  const long period = 2 * n;
  long p = i % period;
  if (p < 0) p += period;
  return static_cast<std::size_t>(p < n ? p : period - 1 - p);
}

std::size_t wrap(long i, long n) {
  long p = i % n;
  if (p < 0) p += n;
  return static_cast<std::size_t>(p);
}

// Low-pass taps solved to full double precision; the 16-digit published
// table leaves the moment conditions off by ~1e-11.
constexpr double kSym8[] = {
    -0.0033824159510057964, -0.0005421323318030509, 0.03169508781152581,
    0.007607487324988558,   -0.14329423835126645,   -0.061273359067845735,
    0.4813596512590049,     0.7771857516996348,     0.3644418948362278,
    -0.051945838107860534,  -0.027219029917113172,  0.04913717967372704,
    0.003808752013899459,   -0.014952258337061597,  -0.0003029205147259922,
    0.0018899503327691333,
};

}  // namespace

// ---------------------------------------------------------------------------
// WaveletBasis

WaveletBasis::WaveletBasis(std::vector<double> filter, int order, Boundary boundary,
                           int dimension, int coarsest_level)
    : filter_(std::move(filter)),
      order_(order),
      boundary_(boundary),
      dimension_(dimension),
      coarsest_level_(coarsest_level) {
  if (dimension_ != 1 && dimension_ != 2) {
    throw std::invalid_argument("wavelet dimension must be 1 or 2");
  }
  if (coarsest_level_ < 0) throw std::invalid_argument("coarsest level must be >= 0");
  const std::size_t len = filter_.size();
  if (len < 2 || len % 2 != 0) throw std::invalid_argument("filter length must be even");

  double sum = 0.0;
  for (double h : filter_) sum += h;
  if (std::abs(sum - std::numbers::sqrt2) > 1e-12) {
    throw std::invalid_argument("filter taps must sum to sqrt(2)");
  }
  for (std::size_t m = 0; 2 * m < len; ++m) {
    double dot = 0.0;
    for (std::size_t k = 0; k + 2 * m < len; ++k) dot += filter_[k] * filter_[k + 2 * m];
    const double expected = m == 0 ? 1.0 : 0.0;
    if (std::abs(dot - expected) > 1e-10) {
      throw std::invalid_argument("filter taps are not orthonormal under even shifts");
    }
  }

  highpass_.resize(len);
  for (std::size_t m = 0; m < len; ++m) {
    highpass_[m] = (m % 2 == 0 ? 1.0 : -1.0) * filter_[len - 1 - m];
  }

  // Centroid of phi from the refinement equation: M1 = sum_k k h_k / sqrt(2).
  double m1 = 0.0;
  for (std::size_t k = 0; k < len; ++k) m1 += static_cast<double>(k) * filter_[k];
  sample_offset_ = m1 / std::numbers::sqrt2 - shift();
}

WaveletBasis WaveletBasis::symmlet8(int dimension, Boundary boundary, int coarsest_level) {
  return WaveletBasis(std::vector<double>(std::begin(kSym8), std::end(kSym8)), 8, boundary,
                      dimension, coarsest_level);
}

WaveletBasis WaveletBasis::haar(int dimension, Boundary boundary, int coarsest_level) {
  const double r = 1.0 / std::numbers::sqrt2;
  return WaveletBasis({r, r}, 1, boundary, dimension, coarsest_level);
}

WaveletBasis WaveletBasis::with_boundary(Boundary b) const {
  WaveletBasis copy = *this;
  copy.boundary_ = b;
  return copy;
}

std::size_t WaveletBasis::count_at_level(int level) const {
  return std::size_t{1} << (level * dimension_);
}

int WaveletBasis::level_for_count(std::size_t count) const {
  if (!is_power_of_two(count)) {
    throw FormatError("coefficient count " + std::to_string(count) + " is not dyadic");
  }
  const int bits = log2_exact(count);
  if (bits % dimension_ != 0) {
    throw FormatError("coefficient count " + std::to_string(count) +
                      " is not a full 2D dyadic level");
  }
  const int level = bits / dimension_;
  if (level < coarsest_level_) {
    throw FormatError("coefficient count is below the coarsest level");
  }
  return level;
}

// ---------------------------------------------------------------------------
// Single-index ordering

namespace {

int kind_rank(const WaveletBasis& basis, BasisKind kind) {
  if (basis.dimension() == 1) {
    if (kind != BasisKind::wavelet) throw std::out_of_range("1D wavelets have a single detail type");
    return 0;
  }
  switch (kind) {
    case BasisKind::hl: return 0;
    case BasisKind::lh: return 1;
    case BasisKind::hh: return 2;
    default: throw std::out_of_range("2D wavelets use HL, LH or HH orientation");
  }
}

}  // namespace

std::size_t single_index_map(const WaveletBasis& basis, int finest_level, const BasisElement& e) {
  const int d = basis.dimension();
  const int j0 = basis.coarsest_level();
  const long extent_j = 1L << e.level;
  auto check_position = [&](long extent) {
    for (int a = 0; a < d; ++a) {
      if (e.position[a] < 0 || e.position[a] >= extent) {
        throw std::out_of_range("wavelet position out of range for level " +
                                std::to_string(e.level));
      }
    }
    if (d == 1 && e.position[1] != 0) throw std::out_of_range("1D element with 2D position");
  };
  auto flat = [&](long extent) -> std::size_t {
    return d == 1 ? static_cast<std::size_t>(e.position[0])
                  : static_cast<std::size_t>(e.position[0] * extent + e.position[1]);
  };

  if (e.kind == BasisKind::scaling) {
    if (e.level != j0) throw std::out_of_range("scaling functions live at the coarsest level only");
    check_position(extent_j);
    return flat(extent_j) + 1;
  }
  if (e.level < j0 || e.level >= finest_level) {
    throw std::out_of_range("wavelet level " + std::to_string(e.level) + " outside [" +
                            std::to_string(j0) + ", " + std::to_string(finest_level) + ")");
  }
  const int rank = kind_rank(basis, e.kind);
  check_position(extent_j);
  const std::size_t per_type = basis.count_at_level(e.level);
  // Everything up to level j (scaling + coarser wavelets) spans 2^(j d) slots.
  return basis.count_at_level(e.level) + static_cast<std::size_t>(rank) * per_type +
         flat(extent_j) + 1;
}

BasisElement basis_element(const WaveletBasis& basis, int finest_level, std::size_t ell) {
  const std::size_t total = basis.count_at_level(finest_level);
  if (ell < 1 || ell > total) throw std::out_of_range("single index out of range");
  const int d = basis.dimension();
  const int j0 = basis.coarsest_level();
  const std::size_t offset = ell - 1;
  BasisElement e;
  auto unflatten = [&](std::size_t flat, long extent) {
    if (d == 1) {
      e.position = {static_cast<int>(flat), 0};
    } else {
      e.position = {static_cast<int>(flat / extent), static_cast<int>(flat % extent)};
    }
  };
  if (offset < basis.count_at_level(j0)) {
    e.level = j0;
    e.kind = BasisKind::scaling;
    unflatten(offset, 1L << j0);
    return e;
  }
  int j = j0;
  while (basis.count_at_level(j + 1) <= offset) ++j;
  const std::size_t within = offset - basis.count_at_level(j);
  const std::size_t per_type = basis.count_at_level(j);
  e.level = j;
  if (d == 1) {
    e.kind = BasisKind::wavelet;
  } else {
    static constexpr BasisKind kinds[] = {BasisKind::hl, BasisKind::lh, BasisKind::hh};
    e.kind = kinds[within / per_type];
  }
  unflatten(within % per_type, 1L << j);
  return e;
}

// ---------------------------------------------------------------------------
// CoefficientVector

CoefficientVector::CoefficientVector(WaveletBasis b, std::vector<double> c)
    : coeffs(std::move(c)), basis(std::move(b)), level(basis.level_for_count(coeffs.size())) {}

CoefficientVector::CoefficientVector(WaveletBasis b, int lvl)
    : coeffs(b.count_at_level(lvl), 0.0), basis(std::move(b)), level(lvl) {}

// ---------------------------------------------------------------------------
// LevelOperator

LevelOperator::LevelOperator(const WaveletBasis& basis, std::size_t n)
    : n_(n),
      h_(basis.filter()),
      g_(basis.highpass()),
      shift_(basis.shift()),
      boundary_(basis.boundary()) {
  if (n_ < 2 || n_ % 2 != 0) throw std::invalid_argument("level operator needs an even size");
  if (boundary_ == Boundary::periodic) return;

  const long len = static_cast<long>(h_.size());
  const long half = static_cast<long>(n_ / 2);
  const long nn = static_cast<long>(n_);
  std::vector<double> sym_row(n_), per_row(n_);
  for (long row = 0; row < nn; ++row) {
    const long k = row % half;
    const auto& taps = row < half ? h_ : g_;
    const long first = 2 * k - shift_;
    if (first >= 0 && first + len - 1 < nn) continue;  // window never leaves [0, N)
    std::fill(sym_row.begin(), sym_row.end(), 0.0);
    std::fill(per_row.begin(), per_row.end(), 0.0);
    for (long m = 0; m < len; ++m) {
      sym_row[reflect(first + m, nn)] += taps[m];
      per_row[wrap(first + m, nn)] += taps[m];
    }
    SparseRow diff, per;
    for (std::size_t c = 0; c < n_; ++c) {
      if (sym_row[c] != per_row[c]) diff.emplace_back(c, sym_row[c] - per_row[c]);
      if (per_row[c] != 0.0) per.emplace_back(c, per_row[c]);
    }
    if (diff.empty()) continue;
    correction_rows_.push_back(std::move(diff));
    periodic_rows_.push_back(std::move(per));
  }

  const auto r = static_cast<Eigen::Index>(correction_rows_.size());
  if (r == 0) return;
  Eigen::MatrixXd cap = Eigen::MatrixXd::Identity(r, r);
  std::vector<double> dense(n_);
  for (Eigen::Index j = 0; j < r; ++j) {
    std::fill(dense.begin(), dense.end(), 0.0);
    for (auto [c, v] : periodic_rows_[j]) dense[c] = v;
    for (Eigen::Index i = 0; i < r; ++i) {
      double dot = 0.0;
      for (auto [c, v] : correction_rows_[i]) dot += v * dense[c];
      cap(i, j) += dot;
    }
  }
  Eigen::FullPivLU<Eigen::MatrixXd> lu(cap);
  if (!lu.isInvertible()) {
    throw std::runtime_error("symmetric-boundary analysis is singular at size " +
                             std::to_string(n_));
  }
  Eigen::MatrixXd inv = lu.inverse();
  capacitance_inv_.resize(static_cast<std::size_t>(r * r));
  for (Eigen::Index i = 0; i < r; ++i) {
    for (Eigen::Index j = 0; j < r; ++j) capacitance_inv_[i * r + j] = inv(i, j);
  }
}

void LevelOperator::analyze(std::span<const double> in, std::span<double> out) const {
  const long len = static_cast<long>(h_.size());
  const long nn = static_cast<long>(n_);
  const std::size_t half = n_ / 2;
  const bool periodic = boundary_ == Boundary::periodic;
  for (std::size_t k = 0; k < half; ++k) {
    const long first = 2 * static_cast<long>(k) - shift_;
    double a = 0.0, d = 0.0;
    if (first >= 0 && first + len - 1 < nn) {
      const double* x = in.data() + first;
      for (long m = 0; m < len; ++m) {
        a += h_[m] * x[m];
        d += g_[m] * x[m];
      }
    } else {
      for (long m = 0; m < len; ++m) {
        const double xv = in[periodic ? wrap(first + m, nn) : reflect(first + m, nn)];
        a += h_[m] * xv;
        d += g_[m] * xv;
      }
    }
    out[k] = a;
    out[half + k] = d;
  }
}

void LevelOperator::periodic_transpose(std::span<const double> in, std::span<double> out) const {
  const long len = static_cast<long>(h_.size());
  const long nn = static_cast<long>(n_);
  const std::size_t half = n_ / 2;
  std::fill(out.begin(), out.end(), 0.0);
  for (std::size_t k = 0; k < half; ++k) {
    const double a = in[k];
    const double d = in[half + k];
    const long first = 2 * static_cast<long>(k) - shift_;
    if (first >= 0 && first + len - 1 < nn) {
      double* x = out.data() + first;
      for (long m = 0; m < len; ++m) x[m] += h_[m] * a + g_[m] * d;
    } else {
      for (long m = 0; m < len; ++m) out[wrap(first + m, nn)] += h_[m] * a + g_[m] * d;
    }
  }
}

void LevelOperator::synthesize(std::span<const double> in, std::span<double> out) const {
  periodic_transpose(in, out);
  const std::size_t r = correction_rows_.size();
  if (r == 0) return;
  // x = x0 - U M^{-1} E_R x0 with U = P_R^T and x0 = P^T y.
  std::vector<double> t(r, 0.0), v(r, 0.0);
  for (std::size_t i = 0; i < r; ++i) {
    double s = 0.0;
    for (auto [c, e] : correction_rows_[i]) s += e * out[c];
    t[i] = s;
  }
  for (std::size_t i = 0; i < r; ++i) {
    double s = 0.0;
    for (std::size_t j = 0; j < r; ++j) s += capacitance_inv_[i * r + j] * t[j];
    v[i] = s;
  }
  for (std::size_t i = 0; i < r; ++i) {
    for (auto [c, p] : periodic_rows_[i]) out[c] -= p * v[i];
  }
}

// ---------------------------------------------------------------------------
// WaveletTransform

WaveletTransform::WaveletTransform(WaveletBasis basis, int finest_level)
    : basis_(std::move(basis)), finest_level_(finest_level) {
  const int j0 = basis_.coarsest_level();
  if (finest_level_ < j0) throw FormatError("finest level below the coarsest level");
  for (int j = j0 + 1; j <= finest_level_; ++j) ops_.emplace_back(basis_, std::size_t{1} << j);
}

const LevelOperator& WaveletTransform::op_for(std::size_t n) const {
  const int j = log2_exact(n);
  return ops_[static_cast<std::size_t>(j - basis_.coarsest_level() - 1)];
}

std::vector<double> WaveletTransform::forward(std::span<const double> grid) const {
  const std::size_t total = count();
  if (grid.size() != total) throw FormatError("grid size does not match the transform level");
  const std::size_t n_axis = std::size_t{1} << finest_level_;
  const std::size_t n_min = std::size_t{1} << basis_.coarsest_level();
  std::vector<double> buf(grid.begin(), grid.end());
  std::vector<double> line(n_axis), out(n_axis);

  if (basis_.dimension() == 1) {
    for (std::size_t n = n_axis; n > n_min; n /= 2) {
      op_for(n).analyze(std::span(buf.data(), n), std::span(out.data(), n));
      std::copy_n(out.begin(), n, buf.begin());
    }
    return buf;
  }

  for (std::size_t n = n_axis; n > n_min; n /= 2) {
    const auto& op = op_for(n);
    for (std::size_t i = 0; i < n; ++i) {
      double* row = buf.data() + i * n_axis;
      op.analyze(std::span<const double>(row, n), std::span(out.data(), n));
      std::copy_n(out.begin(), n, row);
    }
    for (std::size_t c = 0; c < n; ++c) {
      for (std::size_t i = 0; i < n; ++i) line[i] = buf[i * n_axis + c];
      op.analyze(std::span<const double>(line.data(), n), std::span(out.data(), n));
      for (std::size_t i = 0; i < n; ++i) buf[i * n_axis + c] = out[i];
    }
  }
  return from_mallat(buf);
}

std::vector<double> WaveletTransform::inverse(std::span<const double> coeffs) const {
  const std::size_t total = count();
  if (coeffs.size() > total) throw FormatError("more coefficients than the transform level holds");
  basis_.level_for_count(coeffs.size());
  const std::size_t n_axis = std::size_t{1} << finest_level_;
  const std::size_t n_min = std::size_t{1} << basis_.coarsest_level();
  std::vector<double> line(n_axis), out(n_axis);

  if (basis_.dimension() == 1) {
    std::vector<double> buf(total, 0.0);
    std::copy(coeffs.begin(), coeffs.end(), buf.begin());
    for (std::size_t n = 2 * n_min; n <= n_axis; n *= 2) {
      op_for(n).synthesize(std::span<const double>(buf.data(), n), std::span(out.data(), n));
      std::copy_n(out.begin(), n, buf.begin());
    }
    return buf;
  }

  std::vector<double> buf;
  to_mallat(coeffs, buf);
  for (std::size_t n = 2 * n_min; n <= n_axis; n *= 2) {
    const auto& op = op_for(n);
    for (std::size_t c = 0; c < n; ++c) {
      for (std::size_t i = 0; i < n; ++i) line[i] = buf[i * n_axis + c];
      op.synthesize(std::span<const double>(line.data(), n), std::span(out.data(), n));
      for (std::size_t i = 0; i < n; ++i) buf[i * n_axis + c] = out[i];
    }
    for (std::size_t i = 0; i < n; ++i) {
      double* row = buf.data() + i * n_axis;
      op.synthesize(std::span<const double>(row, n), std::span(out.data(), n));
      std::copy_n(out.begin(), n, row);
    }
  }
  return buf;
}

// Mallat layout: after a 2D analysis step on an N x N block, rows [0,N/2)
// are low-pass in z1 and columns [0,N/2) are low-pass in z2.
void WaveletTransform::to_mallat(std::span<const double> coeffs, std::vector<double>& square) const {
  const std::size_t n_axis = std::size_t{1} << finest_level_;
  square.assign(n_axis * n_axis, 0.0);
  const int j0 = basis_.coarsest_level();
  const std::size_t s0 = std::size_t{1} << j0;
  std::size_t pos = 0;
  auto take_block = [&](std::size_t r0, std::size_t c0, std::size_t s) {
    for (std::size_t i = 0; i < s; ++i) {
      for (std::size_t k = 0; k < s; ++k) {
        square[(r0 + i) * n_axis + c0 + k] = pos < coeffs.size() ? coeffs[pos] : 0.0;
        ++pos;
      }
    }
  };
  take_block(0, 0, s0);
  for (std::size_t s = s0; s < n_axis; s *= 2) {
    take_block(s, 0, s);  // HL
    take_block(0, s, s);  // LH
    take_block(s, s, s);  // HH
  }
}

std::vector<double> WaveletTransform::from_mallat(const std::vector<double>& square) const {
  const std::size_t n_axis = std::size_t{1} << finest_level_;
  std::vector<double> coeffs;
  coeffs.reserve(n_axis * n_axis);
  const std::size_t s0 = std::size_t{1} << basis_.coarsest_level();
  auto put_block = [&](std::size_t r0, std::size_t c0, std::size_t s) {
    for (std::size_t i = 0; i < s; ++i) {
      for (std::size_t k = 0; k < s; ++k) coeffs.push_back(square[(r0 + i) * n_axis + c0 + k]);
    }
  };
  put_block(0, 0, s0);
  for (std::size_t s = s0; s < n_axis; s *= 2) {
    put_block(s, 0, s);
    put_block(0, s, s);
    put_block(s, s, s);
  }
  return coeffs;
}

CoefficientVector forward_dwt(const WaveletBasis& basis, const GridValues& samples) {
  if (samples.dimension != basis.dimension()) {
    throw FormatError("grid dimension does not match the wavelet basis");
  }
  if (!is_power_of_two(samples.per_axis)) {
    throw FormatError("grid with " + std::to_string(samples.per_axis) +
                      " samples per axis is not dyadic");
  }
  if (samples.per_axis < basis.filter().size()) {
    throw FormatError("grid is shorter than the wavelet filter");
  }
  std::size_t expected = samples.per_axis;
  if (samples.dimension == 2) expected *= samples.per_axis;
  if (samples.values.size() != expected) throw FormatError("grid values do not match its shape");
  const int level = log2_exact(samples.per_axis);
  WaveletTransform transform(basis, level);
  return CoefficientVector(basis, transform.forward(samples.values));
}

GridValues inverse_dwt(const CoefficientVector& c) {
  const int level = c.basis.level_for_count(c.coeffs.size());
  WaveletTransform transform(c.basis, level);
  GridValues out;
  out.values = transform.inverse(c.coeffs);
  out.per_axis = std::size_t{1} << level;
  out.dimension = c.basis.dimension();
  return out;
}

// ---------------------------------------------------------------------------
// SeriesGrid

SeriesGrid::SeriesGrid(std::vector<double> values, std::size_t per_axis, int dimension,
                       Boundary boundary, double sample_offset)
    : values_(std::move(values)),
      per_axis_(per_axis),
      dimension_(dimension),
      boundary_(boundary),
      offset_(sample_offset) {}

void SeriesGrid::axis_weights(double z, std::array<std::size_t, 2>& idx, std::array<double, 2>& w,
                              int& count) const {
  const long n = static_cast<long>(per_axis_);
  const double u = z * static_cast<double>(per_axis_) - offset_;
  if (boundary_ == Boundary::periodic) {
    const double fl = std::floor(u);
    const double frac = u - fl;
    const long i0 = static_cast<long>(fl);
    idx = {wrap(i0, n), wrap(i0 + 1, n)};
    w = {1.0 - frac, frac};
    count = 2;
    return;
  }
  if (u <= 0.0) {
    idx = {0, 0};
    w = {1.0, 0.0};
    count = 1;
    return;
  }
  if (u >= static_cast<double>(n - 1)) {
    idx = {static_cast<std::size_t>(n - 1), 0};
    w = {1.0, 0.0};
    count = 1;
    return;
  }
  const double fl = std::floor(u);
  const auto i0 = static_cast<std::size_t>(fl);
  const double frac = u - fl;
  idx = {i0, i0 + 1};
  w = {1.0 - frac, frac};
  count = 2;
}

Stencil SeriesGrid::stencil(const Vec2& z) const {
  Stencil s;
  std::array<std::size_t, 2> i1{}, i2{};
  std::array<double, 2> w1{}, w2{};
  int c1 = 0, c2 = 0;
  axis_weights(z[0], i1, w1, c1);
  if (dimension_ == 1) {
    for (int a = 0; a < c1; ++a) {
      s.index[a] = i1[a];
      s.weight[a] = w1[a];
    }
    s.count = c1;
    return s;
  }
  axis_weights(z[1], i2, w2, c2);
  for (int a = 0; a < c1; ++a) {
    for (int b = 0; b < c2; ++b) {
      s.index[s.count] = i1[a] * per_axis_ + i2[b];
      s.weight[s.count] = w1[a] * w2[b];
      ++s.count;
    }
  }
  return s;
}

double SeriesGrid::operator()(const Vec2& z) const {
  const Stencil s = stencil(z);
  double v = 0.0;
  for (int i = 0; i < s.count; ++i) v += s.weight[i] * values_[s.index[i]];
  return v;
}

Vec2 SeriesGrid::position(std::size_t flat_index) const {
  const double n = static_cast<double>(per_axis_);
  if (dimension_ == 1) return {(static_cast<double>(flat_index) + offset_) / n, 0.0};
  return {(static_cast<double>(flat_index / per_axis_) + offset_) / n,
          (static_cast<double>(flat_index % per_axis_) + offset_) / n};
}

// ---------------------------------------------------------------------------
// SeriesSynthesizer

int default_extra_levels(int dimension, int level) {
  const int wanted = dimension == 1 ? 4 : 2;
  const int cap = dimension == 1 ? 14 : 9;
  return std::max(1, std::min(wanted, cap - level));
}

SeriesSynthesizer::SeriesSynthesizer(WaveletBasis basis, int level, int extra_levels)
    : transform_(basis,
                 level + (extra_levels < 0 ? default_extra_levels(basis.dimension(), level)
                                           : extra_levels)),
      level_(level) {
  const int fine = transform_.finest_level();
  scale_ = std::pow(2.0, 0.5 * fine * transform_.basis().dimension());
}

SeriesGrid SeriesSynthesizer::synthesize(std::span<const double> coeffs) const {
  if (coeffs.size() != transform_.basis().count_at_level(level_)) {
    throw FormatError("coefficient vector length does not match the synthesizer level");
  }
  std::vector<double> grid = transform_.inverse(coeffs);
  for (double& v : grid) v *= scale_;
  return SeriesGrid(std::move(grid), std::size_t{1} << transform_.finest_level(),
                    transform_.basis().dimension(), transform_.basis().boundary(),
                    transform_.basis().sample_offset());
}

SeriesGrid SeriesSynthesizer::geometry() const {
  const std::size_t n = std::size_t{1} << transform_.finest_level();
  const int d = transform_.basis().dimension();
  return SeriesGrid(std::vector<double>(d == 1 ? n : n * n, 0.0), n, d,
                    transform_.basis().boundary(), transform_.basis().sample_offset());
}

SeriesEvaluation evaluate_series(const CoefficientVector& c, std::span<const Vec2> points,
                                 int extra_levels) {
  SeriesSynthesizer synth(c.basis, c.level, extra_levels);
  const SeriesGrid grid = synth.synthesize(c.coeffs);
  SeriesEvaluation out;
  out.values.reserve(points.size());
  const int d = c.basis.dimension();
  for (const Vec2& p : points) {
    Vec2 z = p;
    bool moved = false;
    for (int a = 0; a < d; ++a) {
      const double clamped = std::clamp(z[a], 0.0, 1.0);
      if (clamped != z[a] || std::isnan(z[a])) moved = true;
      z[a] = std::isnan(z[a]) ? 0.0 : clamped;
    }
    if (moved) ++out.clamped;
    out.values.push_back(grid(z));
  }
  return out;
}

}  // namespace covbayes
