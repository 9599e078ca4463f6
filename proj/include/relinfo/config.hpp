#pragma once

// Run configuration: one JSON object with sections
//
//   {"seed": 1,
//    "model":    {"kind": "sir" | "regression", ...model keys},
//    "mcmc":     {ChainConfig keys, "chains"},
//    "ri":       {"n_null_min", "max_null_draws", "bootstrap_replicates", ...},
//    "scenario": {"name", ...scenario keys}}
//
// Every section and key is optional; missing keys take the defaults below and
// unknown keys are rejected. to_json writes every key, so the echo of a parsed
// config is the config actually run.

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "relinfo/bernstein.hpp"
#include "relinfo/mcmc.hpp"
#include "relinfo/sir.hpp"

namespace relinfo {

struct SirSection {
  /// Household JSON; defaults to <out>/households.json.
  std::optional<std::string> data;
  std::size_t households = 20;
  std::size_t members = 6;
  sir::SirParams truth{1.0, -0.5, 1.0};
  std::string covariates = "alternating";  ///< or "bernoulli"
  sir::SirPriors priors;
  /// Importance sampling for the observed log-likelihood of the fitted data.
  sir::IsSettings is{1000, 100'000, 0.1};
};

struct RegressionSection {
  /// Regression CSV (header x,y); defaults to <out>/data.csv.
  std::optional<std::string> data;
  int k = 9;  ///< simulated design x = j/k, j = 0..k
  double slope = 0.6;
  double sigma = 0.4;
  double order_mean = 5.0;
  int n_max = 20;
  double tau1 = -2.0;
  double tau2 = 2.0;
  std::string monotone_mode = "sorted";  ///< or "derivative"
  std::size_t moves_per_sweep = 10;
  std::optional<double> sigma_rate;
};

struct McmcSection {
  std::size_t n_iterations = 50'000;
  std::size_t burn_in = 10'000;
  std::size_t thinning = 10;
  std::vector<double> initial_scales;
  bool adapt = true;
  double target_acceptance = 0.3;
  std::size_t chains = 1;
};

struct RiSection {
  std::size_t n_null_min = 50;
  std::size_t max_null_draws = 100;
  std::size_t bootstrap_replicates = 200;
  bool plugin_correction = false;
  /// Per new household in the new-households scenario.
  std::size_t is_initial_samples = 500;
  std::size_t is_max_samples = 20'000;
  double is_tolerance = 0.1;
  std::string null_fallback = "error";  ///< or "constrained"
};

struct ScenarioSection {
  /// sir: "infection_times", "new_households" or "compare"; regression: "design".
  std::string name = "compare";
  std::size_t n_new = 4;
  /// Named regression designs: replicate-K, partition-K, duplicate-2K,
  /// partition-2K, empty.
  std::vector<std::string> designs{"replicate-K", "partition-K", "duplicate-2K", "partition-2K"};
  /// Extra custom design given inline or as a CSV of x values.
  std::optional<std::vector<double>> points;
  std::optional<std::string> points_file;
};

struct RunConfig {
  std::uint64_t seed = 1;
  std::string model = "sir";  ///< "sir" or "regression"
  SirSection sir;
  RegressionSection regression;
  McmcSection mcmc;
  RiSection ri;
  ScenarioSection scenario;

  void validate() const;
  mcmc::ChainConfig chain_config() const;
  bernstein::BernsteinPrior bernstein_prior() const;
};

/// Parses and validates; relative file paths resolve against `base_dir`.
RunConfig config_from_json(const nlohmann::json& j, const std::filesystem::path& base_dir = {});
nlohmann::json to_json(const RunConfig& c);
RunConfig load_config(const std::filesystem::path& path);
/// Config with defaults for a model kind ("sir" or "regression").
RunConfig default_config(const std::string& model);

}  // namespace relinfo
