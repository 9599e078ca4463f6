#pragma once

// The four pipeline stages behind the CLI. Each reads and writes files in one
// output directory:
//
//   simulate  households.json + truth.json    (sir)
//             data.csv + truth.csv            (regression)
//   fit       draws.csv + draws.json
//   ri        report.json, report.svg, components.csv, ratios.csv
//             (+ null_draws.csv/json when the constrained fallback runs)
//   report    re-renders report.svg from report.json

#include <filesystem>
#include <iosfwd>
#include <string>
#include <vector>

#include "relinfo/bernstein.hpp"
#include "relinfo/config.hpp"
#include "relinfo/report.hpp"

namespace relinfo {

void cmd_simulate(const RunConfig& config, const std::filesystem::path& out_dir);
std::vector<mcmc::DrawSet> cmd_fit(const RunConfig& config, const std::filesystem::path& out_dir);
Report cmd_ri(const RunConfig& config, const std::filesystem::path& out_dir);
Report cmd_report(const std::filesystem::path& out_dir);

/// Regression CSV with header `x,y`; errors name the offending row.
bernstein::RegressionData read_regression_csv(std::istream& in, const std::string& source = "data.csv");
void write_regression_csv(std::ostream& out, const bernstein::RegressionData& data);
/// One x value per line, optional `x` header.
std::vector<double> read_points_csv(std::istream& in, const std::string& source = "points.csv");

/// Named design for observed grid x = j/k: replicate-K, partition-K,
/// duplicate-2K, partition-2K or empty.
std::vector<double> named_design(const std::string& name, int k);

}  // namespace relinfo
