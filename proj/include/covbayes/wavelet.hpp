#pragma once

// Orthonormal dyadic wavelets on [0,1]^d, d in {1,2}.
//
// Coefficients are stored in single-index order: the 2^(j0 d) scaling
// functions at the coarsest level first, then wavelet levels j0, j0+1, ...
// coarse to fine. Inside a level the order is lexicographic in
// (orientation, position); in 2D the orientations are HL (high-pass in z1,
// low-pass in z2), LH, HH and positions are row-major (k1 slow). Index ell
// is 1-based in the public API and equals (array offset + 1).
//
// Grids are row-major with axis 0 = z1. A grid with N samples per axis
// represents the function sum_n x_n phi_{J,n}; sample n sits at
// (n + sample_offset()) / N, the centroid of phi_{J,n}.

#include <array>
#include <cstddef>
#include <memory>
#include <span>
#include <vector>

#include "covbayes/common.hpp"

namespace covbayes {

enum class Boundary { symmetric, periodic };

enum class BasisKind { scaling, wavelet, hl, lh, hh };

class WaveletBasis {
 public:
  // Throws std::invalid_argument if the taps violate the orthonormality
  // sum conditions or the dimension is not 1 or 2.
  WaveletBasis(std::vector<double> filter, int order, Boundary boundary, int dimension,
               int coarsest_level);

  // Least-asymmetric Daubechies with 8 vanishing moments (16 taps).
  static WaveletBasis symmlet8(int dimension, Boundary boundary = Boundary::symmetric,
                               int coarsest_level = 0);
  static WaveletBasis haar(int dimension, Boundary boundary = Boundary::symmetric,
                           int coarsest_level = 0);

  const std::vector<double>& filter() const { return filter_; }
  const std::vector<double>& highpass() const { return highpass_; }
  int order() const { return order_; }
  Boundary boundary() const { return boundary_; }
  int dimension() const { return dimension_; }
  int coarsest_level() const { return coarsest_level_; }

  // Analysis offset s in a_k = sum_m h_m x_{2k+m-s}.
  int shift() const { return static_cast<int>(filter_.size()) / 2 - 1; }
  double sample_offset() const { return sample_offset_; }

  // Number of basis functions up to (excluding) wavelet level J: 2^(J d).
  std::size_t count_at_level(int level) const;
  // Inverse of count_at_level; throws FormatError for non-dyadic counts.
  int level_for_count(std::size_t count) const;

  WaveletBasis with_boundary(Boundary b) const;

 private:
  std::vector<double> filter_;
  std::vector<double> highpass_;
  int order_;
  Boundary boundary_;
  int dimension_;
  int coarsest_level_;
  double sample_offset_;
};

struct BasisElement {
  int level = 0;
  BasisKind kind = BasisKind::scaling;
  std::array<int, 2> position{0, 0};

  bool operator==(const BasisElement&) const = default;
};

// 1-based single index of a basis element for a truncation at `finest_level`.
// Throws std::out_of_range for elements outside the truncated basis.
std::size_t single_index_map(const WaveletBasis& basis, int finest_level, const BasisElement& e);

// Inverse of single_index_map.
BasisElement basis_element(const WaveletBasis& basis, int finest_level, std::size_t ell);

struct CoefficientVector {
  std::vector<double> coeffs;
  WaveletBasis basis;
  int level = 0;  // finest resolution level J, coeffs.size() == 2^(J d)

  CoefficientVector(WaveletBasis b, std::vector<double> c);
  CoefficientVector(WaveletBasis b, int level);  // zeros

  std::size_t truncation() const { return coeffs.size(); }
};

// Samples on an N x ... x N dyadic grid, row-major.
struct GridValues {
  std::vector<double> values;
  std::size_t per_axis = 0;
  int dimension = 1;

  std::size_t size() const { return values.size(); }
};

// One resolution step of the 1D transform on N samples. For the symmetric
// boundary the analysis uses half-sample symmetric extension; synthesis is
// its exact inverse, obtained by correcting the orthogonal periodic
// transpose with a low-rank Woodbury term supported near the edges.
class LevelOperator {
 public:
  LevelOperator(const WaveletBasis& basis, std::size_t n);

  std::size_t size() const { return n_; }
  // out[0:N/2) approximation, out[N/2:N) detail.
  void analyze(std::span<const double> in, std::span<double> out) const;
  void synthesize(std::span<const double> in, std::span<double> out) const;

 private:
  using SparseRow = std::vector<std::pair<std::size_t, double>>;

  std::size_t n_;
  std::vector<double> h_;
  std::vector<double> g_;
  int shift_;
  Boundary boundary_;
  std::vector<SparseRow> correction_rows_;  // rows of A - P that are nonzero
  std::vector<SparseRow> periodic_rows_;    // matching rows of P
  std::vector<double> capacitance_inv_;     // (I + E_R P_R^T)^-1, row-major

  void periodic_transpose(std::span<const double> in, std::span<double> out) const;
};

// Multilevel transform for a fixed basis and finest level; level operators
// are built once so repeated synthesis inside samplers stays cheap.
class WaveletTransform {
 public:
  WaveletTransform(WaveletBasis basis, int finest_level);

  const WaveletBasis& basis() const { return basis_; }
  int finest_level() const { return finest_level_; }
  std::size_t count() const { return basis_.count_at_level(finest_level_); }

  // Grid (2^J per axis) -> coefficients in single-index order.
  std::vector<double> forward(std::span<const double> grid) const;
  // Coefficients (length <= count(), missing fine levels are zero) -> grid.
  std::vector<double> inverse(std::span<const double> coeffs) const;

 private:
  WaveletBasis basis_;
  int finest_level_;
  std::vector<LevelOperator> ops_;  // ops_[i] acts on 2^(j0 + 1 + i) samples

  const LevelOperator& op_for(std::size_t n) const;
  void to_mallat(std::span<const double> coeffs, std::vector<double>& square) const;
  std::vector<double> from_mallat(const std::vector<double>& square) const;
};

CoefficientVector forward_dwt(const WaveletBasis& basis, const GridValues& samples);
GridValues inverse_dwt(const CoefficientVector& c);

struct Stencil {
  std::array<std::size_t, 4> index{};
  std::array<double, 4> weight{};
  int count = 0;
};

// Function values of a truncated series on a fine dyadic grid, with
// (bi)linear interpolation between the sample positions.
class SeriesGrid {
 public:
  SeriesGrid() = default;
  SeriesGrid(std::vector<double> values, std::size_t per_axis, int dimension, Boundary boundary,
             double sample_offset);

  // Points must lie in [0,1]^d; callers clamp first.
  double operator()(const Vec2& z) const;
  Stencil stencil(const Vec2& z) const;

  const std::vector<double>& values() const { return values_; }
  std::vector<double>& values() { return values_; }
  std::size_t per_axis() const { return per_axis_; }
  int dimension() const { return dimension_; }
  Vec2 position(std::size_t flat_index) const;

 private:
  std::vector<double> values_;
  std::size_t per_axis_ = 0;
  int dimension_ = 1;
  Boundary boundary_ = Boundary::symmetric;
  double offset_ = 0.5;

  void axis_weights(double z, std::array<std::size_t, 2>& idx, std::array<double, 2>& w,
                    int& count) const;
};

// Refinement used when extra_levels is negative: 16x per axis in 1D (4x in
// 2D), never below 2x, with the fine grid capped at 2^14 (2D: 2^9) per axis.
// Linear interpolation of a level-J series needs the 16x grid to stay within
// ~2e-3 of the exact values.
int default_extra_levels(int dimension, int level);

// Synthesizes coefficient vectors onto a grid 2^extra_levels times finer per
// axis than the truncation level, scaled to function values.
class SeriesSynthesizer {
 public:
  SeriesSynthesizer(WaveletBasis basis, int level, int extra_levels = -1);

  SeriesGrid synthesize(std::span<const double> coeffs) const;
  // Grid geometry only (zero values), for precomputing stencils.
  SeriesGrid geometry() const;
  const WaveletTransform& transform() const { return transform_; }
  int level() const { return level_; }

 private:
  WaveletTransform transform_;
  int level_;
  double scale_;
};

struct SeriesEvaluation {
  std::vector<double> values;
  std::size_t clamped = 0;  // points moved onto [0,1]^d before evaluation
};

SeriesEvaluation evaluate_series(const CoefficientVector& c, std::span<const Vec2> points,
                                 int extra_levels = -1);

}  // namespace covbayes
