#pragma once

// Result of an `ri` run.
//
// JSON schema ("relinfo-report/1"):
//   {"format", "model", "results": [{"name", "n_new" | "points", "result": RIResult}],
//    "preferred": name of the result with the smallest bi3 (null with one result),
//    "odds": {"event", "posterior_prob", "prior_prob", "ratio", "posterior_se",
//             "posterior_upper", "zero_count"},
//    "nulls": {"source": "filtered" | "constrained", "available", "used", "posterior_fraction"},
//    "diagnostics": [{"label", "blocks": [{"name", "acceptance_rate", "final_scale"}],
//                     "latent_acceptance", "extra_acceptance", "ess": {summary: value | null}}],
//    "config": echo of the run config, "warnings": [...], "wall_clock_seconds"}

#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "relinfo/mcmc.hpp"
#include "relinfo/ri_measures.hpp"

namespace relinfo {

struct ScenarioResult {
  std::string name;
  std::optional<std::size_t> n_new;
  std::optional<std::vector<double>> points;
  ri::RIResult result;
};

struct EventOdds {
  std::string event;
  double posterior_prob = 0.0;
  double prior_prob = 0.0;
  double ratio = 0.0;
  double posterior_se = 0.0;
  double posterior_upper = 0.0;
  bool zero_count = false;
};

struct NullSummary {
  std::string source = "filtered";
  std::size_t available = 0;
  std::size_t used = 0;
  double posterior_fraction = 0.0;
};

struct ChainDiagnostics {
  std::string label;
  std::vector<mcmc::BlockDiagnostics> blocks;
  double latent_acceptance = 0.0;
  double extra_acceptance = 0.0;
  std::vector<std::string> summary_names;
  std::vector<double> ess;  ///< NaN when undefined
};

ChainDiagnostics diagnostics_of(const mcmc::DrawSet& ds, std::string label);

struct Report {
  std::string model;
  std::vector<ScenarioResult> results;
  std::optional<std::string> preferred;
  EventOdds odds;
  NullSummary nulls;
  std::vector<ChainDiagnostics> diagnostics;
  nlohmann::json config;
  std::vector<std::string> warnings;
  double wall_clock_seconds = 0.0;

  /// Sets `preferred` to the result with the smallest bi3 when there are two or more.
  void choose_preferred();
};

nlohmann::json to_json(const Report& r);
Report report_from_json(const nlohmann::json& j);

/// Bar chart of BI3 and BI4 per result, with +/- 2 mc_se error bars.
std::string render_svg(const Report& r);

/// Plain-text summary for the terminal.
std::string summarize(const Report& r);

}  // namespace relinfo
