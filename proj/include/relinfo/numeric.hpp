#pragma once

#include <span>
#include <stdexcept>
#include <string>

namespace relinfo {

/// Raised when an estimator is handed fewer samples than it needs.
class InsufficientSamplesError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

double mean(std::span<const double> x);
/// Unbiased (divisor n - 1) sample variance; two-pass.
double sample_variance(std::span<const double> x);
/// Biased k-th central moment (divisor n).
double central_moment(std::span<const double> x, int k);
/// log(sum(exp(x))); -inf entries contribute zero weight.
double log_sum_exp(std::span<const double> x);
double log_mean_exp(std::span<const double> x);

}  // namespace relinfo
