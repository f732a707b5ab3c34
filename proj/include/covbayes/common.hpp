#pragma once

#include <array>
#include <cstdint>
#include <functional>
#include <random>
#include <stdexcept>
#include <string>

namespace covbayes {

// Points in the spatial window (D <= 2) and in covariate space (d <= 2).
// Unused trailing components are zero.
using Vec2 = std::array<double, 2>;

// Covariate-based intensity z -> rho(z) on [0,1]^d.
using IntensityFn = std::function<double(const Vec2&)>;

using Rng = std::mt19937_64;

// Malformed input files, non-dyadic grids, coefficient length mismatches.
class FormatError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Inconsistent or invalid experiment / prior / sampler configuration.
class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Dataset validation failures (points outside the window, NaN rasters).
class DataError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Unrecoverable numerical failures (NaN intensities and the like).
class NumericError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

std::uint64_t splitmix64(std::uint64_t x);

// Derives an independent stream seed from a base seed and a path of indices.
// derive_seed(s, {a, b}) == splitmix64(splitmix64(splitmix64(s) ^ a) ^ b),
// so (seed, replicate) pairs map to decorrelated mt19937_64 streams.
std::uint64_t derive_seed(std::uint64_t seed, std::initializer_list<std::uint64_t> path);

// Stable 64-bit tag for a string (FNV-1a), used to name seed streams.
std::uint64_t stream_tag(const std::string& name);

}  // namespace covbayes
