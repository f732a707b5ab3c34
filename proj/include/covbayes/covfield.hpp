#pragma once

// Covariate random fields on rectangular windows: CDF-transformed Gaussian
// fields and Poisson-Voronoi fields, gridded with node 0 on the lower corner
// and the last node on the upper corner.

#include <array>
#include <cstdint>
#include <functional>
#include <iosfwd>
#include <string>
#include <vector>

#include "covbayes/common.hpp"

namespace covbayes {

struct Window {
  int D = 1;
  Vec2 lower{0.0, 0.0};
  Vec2 upper{1.0, 0.0};

  // W_n = [-n^{1/D}/2, n^{1/D}/2]^D.
  static Window square(double n, int D);
  static Window box(const Vec2& lower, const Vec2& upper, int D);

  double side(int axis) const { return upper[axis] - lower[axis]; }
  double volume() const;
  bool contains(const Vec2& x, double tol = 0.0) const;
};

enum class Interpolation { nearest, bilinear };

// Per-axis node layout of a field grid.
struct GridLayout {
  std::array<std::size_t, 2> shape{1, 1};
  Vec2 spacing{0.0, 0.0};

  std::size_t node_count() const { return shape[0] * shape[1]; }
};

// `nodes_per_unit` nodes per unit length plus the closing node, each axis
// capped at `max_per_axis` nodes (spacing grows accordingly).
GridLayout make_grid_layout(const Window& w, double nodes_per_unit, std::size_t max_per_axis);

// Default cap: 400 nodes per axis in 2D windows, effectively none in 1D.
std::size_t default_max_per_axis(int D);

// Real-valued field on a grid; node (i0, i1) at lower + (i0 h0, i1 h1),
// stored row-major with axis 0 slow.
struct RawField {
  Window window;
  GridLayout grid;
  std::vector<double> values;
  bool cholesky_fallback = false;
  std::vector<std::string> warnings;
};

struct CovariateField {
  Window window;
  GridLayout grid;
  int d = 1;
  Interpolation interpolation = Interpolation::bilinear;
  std::vector<double> values;  // node-major, d components per node
  bool cholesky_fallback = false;
  std::vector<std::string> warnings;

  std::size_t node_count() const { return grid.node_count(); }
  Vec2 node_value(std::size_t node) const;
  Vec2 node_position(std::size_t node) const;
};

// Zero-mean unit-variance Gaussian field with k(r) = exp(-r^2 / (2 l^2)),
// sampled by circulant embedding (Cholesky fallback if the embedding stays
// indefinite after padding, or would exceed `max_embedding` entries).
RawField simulate_gp_field(const Window& w, const GridLayout& grid, double lengthscale,
                           std::uint64_t seed, std::size_t max_embedding = std::size_t{1} << 24);
RawField simulate_gp_field(const Window& w, double nodes_per_unit, double lengthscale,
                           std::uint64_t seed);

// Componentwise Phi; one raw field per covariate component, all on one grid.
CovariateField gaussian_cdf_transform(const std::vector<RawField>& components);
CovariateField gaussian_cdf_transform(const RawField& raw);

// Independent components with the given lengthscales, transformed by Phi.
CovariateField simulate_gaussian_covariate(const Window& w, const GridLayout& grid,
                                           const std::vector<double>& lengthscales,
                                           std::uint64_t seed);

using MarginalSampler = std::function<Vec2(Rng&)>;
MarginalSampler uniform_marginal(int d);

struct VoronoiOptions {
  double intensity = 1.0;
  int d = 1;
  MarginalSampler marginal;  // uniform on [0,1]^d when empty
  int max_retries = 64;      // empty seed draws before a single seed is forced
  double padding = 3.0;      // seeds cover the window grown by padding * intensity^(-1/D)
};

struct VoronoiSeeds {
  std::vector<Vec2> points;
  std::vector<Vec2> marks;
};

CovariateField simulate_voronoi_field(const Window& w, const GridLayout& grid,
                                      const VoronoiOptions& opts, std::uint64_t seed,
                                      VoronoiSeeds* seeds_out = nullptr);

// Covariate vector at x (nearest node or bilinear), clamped to [0,1]^d.
// Throws std::domain_error outside the window.
Vec2 eval_covariate(const CovariateField& field, const Vec2& x);

struct ErgodicityResult {
  double spatial_average = 0.0;
  double deviation = 0.0;
};

// Midpoint rule over the grid cells of the field.
ErgodicityResult ergodicity_diagnostic(const CovariateField& field,
                                       const std::function<double(const Vec2&)>& f,
                                       double reference);

void write_raster(std::ostream& os, const CovariateField& field);
// unit_range = false admits any finite values (raw rasters before ingestion).
CovariateField read_raster(std::istream& is, bool unit_range = true);
void write_raster_file(const std::string& path, const CovariateField& field);
CovariateField read_raster_file(const std::string& path, bool unit_range = true);

}  // namespace covbayes
