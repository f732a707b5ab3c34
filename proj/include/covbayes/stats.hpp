#pragma once

#include <functional>
#include <span>
#include <vector>

namespace covbayes {

double normal_cdf(double x);
double normal_pdf(double x);

// ln(erfc(x)), finite for all x >= 0 (asymptotic expansion past the underflow point).
double log_erfc(double x);

double standard_laplace_cdf(double t);

// One-sample Kolmogorov-Smirnov statistic sup|F_n - F|.
double ks_statistic(std::vector<double> samples, const std::function<double(double)>& cdf);

// Asymptotic KS critical value c(level)/sqrt(n); level is 0.01 or 0.05.
double ks_critical_value(std::size_t n, double level = 0.01);

double mean(std::span<const double> v);
// Sample standard deviation (n-1 denominator); 0 for fewer than two values.
double sample_sd(std::span<const double> v);

// Quantile by linear interpolation of order statistics, h = (n-1) q.
// `sorted` must be ascending.
double quantile_sorted(std::span<const double> sorted, double q);

}  // namespace covbayes
