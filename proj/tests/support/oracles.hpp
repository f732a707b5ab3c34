#pragma once

// Independent reference computations shared by the unit and acceptance tests.

#include <boost/math/distributions/chi_squared.hpp>

#include <cstddef>
#include <random>
#include <vector>

namespace oracle {

inline double chi2_quantile(double df, double p) {
  return boost::math::quantile(boost::math::chi_squared(df), p);
}

// Pearson statistic for observed counts against fixed expectations.
inline double pearson(const std::vector<double>& observed, const std::vector<double>& expected) {
  double s = 0.0;
  for (std::size_t i = 0; i < observed.size(); ++i) {
    const double d = observed[i] - expected[i];
    s += d * d / expected[i];
  }
  return s;
}

}  // namespace oracle
