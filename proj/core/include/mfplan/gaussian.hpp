#pragma once

#include <cmath>
#include <numbers>
#include <span>

namespace mfp {

inline double normal_pdf(double x) {
  return std::exp(-0.5 * x * x) / std::sqrt(2.0 * std::numbers::pi);
}

inline double normal_cdf(double x) {
  return 0.5 * std::erfc(-x / std::numbers::sqrt2);
}

/// Log density of N(0, variance) at x.
inline double log_gaussian_density(double x, double variance) {
  return -0.5 * x * x / variance -
         0.5 * std::log(2.0 * std::numbers::pi * variance);
}

/// Inverse of the standard normal CDF; p in (0, 1).
double normal_quantile(double p);

/// log(sum(exp(v))) with the usual max shift; -inf entries are skipped and
/// an all -inf (or empty) input returns -inf.
double log_sum_exp(std::span<const double> v);

}  // namespace mfp
