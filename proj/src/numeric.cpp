#include "relinfo/numeric.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace relinfo {

double mean(std::span<const double> x) {
  if (x.empty()) throw InsufficientSamplesError("mean of an empty sample");
  double s = 0.0;
  for (double v : x) s += v;
  return s / static_cast<double>(x.size());
}

double sample_variance(std::span<const double> x) {
  if (x.size() < 2) {
    throw InsufficientSamplesError("sample variance needs at least 2 values, got " +
                                   std::to_string(x.size()));
  }
  const double m = mean(x);
  double ss = 0.0;
  for (double v : x) ss += (v - m) * (v - m);
  return ss / static_cast<double>(x.size() - 1);
}

double central_moment(std::span<const double> x, int k) {
  const double m = mean(x);
  double s = 0.0;
  for (double v : x) s += std::pow(v - m, k);
  return s / static_cast<double>(x.size());
}

double log_sum_exp(std::span<const double> x) {
  constexpr double neg_inf = -std::numeric_limits<double>::infinity();
  if (x.empty()) return neg_inf;
  const double hi = *std::max_element(x.begin(), x.end());
  if (hi == neg_inf) return neg_inf;
  double s = 0.0;
  for (double v : x) s += std::exp(v - hi);
  return hi + std::log(s);
}

double log_mean_exp(std::span<const double> x) {
  if (x.empty()) throw InsufficientSamplesError("log-mean-exp of an empty sample");
  return log_sum_exp(x) - std::log(static_cast<double>(x.size()));
}

}  // namespace relinfo
