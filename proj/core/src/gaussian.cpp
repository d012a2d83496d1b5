#include "mfplan/gaussian.hpp"

#include <algorithm>
#include <boost/math/special_functions/erf.hpp>
#include <limits>

namespace mfp {

double normal_quantile(double p) {
  return -std::numbers::sqrt2 * boost::math::erfc_inv(2.0 * p);
}

double log_sum_exp(std::span<const double> v) {
  constexpr double neg_inf = -std::numeric_limits<double>::infinity();
  double m = neg_inf;
  for (double x : v) m = std::max(m, x);
  if (m == neg_inf) return neg_inf;
  double s = 0.0;
  for (double x : v) s += std::exp(x - m);
  return m + std::log(s);
}

}  // namespace mfp
