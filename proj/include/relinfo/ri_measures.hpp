#pragma once

// Relative-information measures of a Bayesian hypothesis test.
//
// Both measures compare how far the observed-data log-likelihood is from flat
// (its posterior variance) with the extra spread contributed by the missing
// data, averaging over null parameter values theta0 drawn from the posterior
// restricted to the null hypothesis:
//
//   bi3 = E0[V_lod] / E0[V_lod + V_ratio(theta0)]
//   bi4 = E0[V_lod / (V_lod + V_ratio(theta0))]
//
// V_lod = Var[l(theta) - l(theta0) | Y_ob] does not depend on theta0, so one
// value serves every null draw. V_ratio(theta0) is the variance, over joint
// posterior draws (theta, Y_mis), of log P(Y_mis|Y_ob,theta)/P(Y_mis|Y_ob,theta0).

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

#include "relinfo/numeric.hpp"

namespace relinfo::ri {

/// Both the observed and the conditional likelihoods are flat, so the 0/0
/// ratio carries no information about the test.
class DegenerateInformationError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Per-draw observed-data log-likelihood l(theta; Y_ob).
struct ObservedLodSamples {
  std::vector<double> values;
  /// Standard errors of the values when l is itself estimated.
  std::optional<std::vector<double>> se;

  void validate() const;
};

/// Log conditional-density ratios for one null draw theta0, one value per
/// joint draw (theta, Y_mis).
struct ConditionalRatioSamples {
  std::size_t null_draw_id = 0;
  std::vector<double> values;

  void validate() const;
};

struct VarianceEstimate {
  double value = 0.0;
  double mc_se = 0.0;
};

struct RIResult {
  double bi3 = 1.0;
  double bi4 = 1.0;
  double v_lod = 0.0;
  std::vector<double> v_ratio_per_null;
  std::vector<std::size_t> null_draw_ids;
  double mc_se_bi3 = 0.0;
  double mc_se_bi4 = 0.0;
  std::size_t n_theta_draws = 0;
  std::size_t n_null_draws = 0;
  std::size_t n_mis_draws = 0;
  std::vector<std::string> warnings;

  bool operator==(const RIResult&) const = default;
};

struct RIOptions {
  std::size_t bootstrap_replicates = 200;
  std::uint64_t bootstrap_seed = 0x6272'6933ULL;
  /// Subtract mean(se^2) of the plug-in log-likelihoods from V_lod (floored at 0).
  bool plugin_correction = false;
  /// Warn when any plug-in se exceeds this fraction of sd(ell.values).
  double se_warning_fraction = 0.1;
};

/// Unbiased sample variance of the observed log-likelihoods.
double lod_variance(const ObservedLodSamples& ell);

/// Sample variance plus its standard error from the fourth central moment.
VarianceEstimate ratio_variance(const ConditionalRatioSamples& w);

double bi3(double v_lod, std::span<const double> v_ratios);

/// `null_ids`, when given, names the offending draw in degenerate-case errors.
double bi4(double v_lod, std::span<const double> v_ratios,
           std::span<const std::size_t> null_ids = {});

RIResult ri_compute(const ObservedLodSamples& ell,
                    std::span<const ConditionalRatioSamples> ratios,
                    const RIOptions& options = {});

// JSON surface:
//   input  {"ell": [...], "ell_se": [...], "ratios": [{"null_draw_id": k, "values": [...]}]}
//   output {"bi3", "bi4", "v_lod", "v_ratio_per_null", "mc_se_bi3", "mc_se_bi4", ...}
struct RIInput {
  ObservedLodSamples ell;
  std::vector<ConditionalRatioSamples> ratios;
};

RIInput ri_input_from_json(const nlohmann::json& j);
nlohmann::json to_json(const RIInput& in);
nlohmann::json to_json(const RIResult& r);
RIResult ri_result_from_json(const nlohmann::json& j);

}  // namespace relinfo::ri
