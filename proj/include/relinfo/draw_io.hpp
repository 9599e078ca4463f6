#pragma once

// DrawSet persistence.
//
// draws CSV, one row per retained draw, columns in this order:
//   chain, iteration, log_prior, obs_loglik, obs_loglik_se, theta, latent
// theta and latent are ';'-separated lists (latent may be empty). Numbers are
// written with 17 significant digits so values round-trip exactly.
//
// JSON sidecar: {"format": "relinfo-draws/1", "chains": [{config echo,
// per-block acceptance and final scale, latent/extra acceptance, ESS per
// summary (null when undefined), scale trace}]}.

#include <filesystem>
#include <iosfwd>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

#include "relinfo/mcmc.hpp"

namespace relinfo {

/// Malformed input file; the message names the offending row when known.
class ParseError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

std::string format_double(double v);
/// Strict full-string parse; throws std::invalid_argument on junk.
double parse_double(const std::string& s);

}  // namespace relinfo

namespace relinfo::mcmc {

void write_draws_csv(std::ostream& out, std::span<const DrawSet> chains);
nlohmann::json draws_metadata(std::span<const DrawSet> chains);

/// Rebuilds DrawSets from the CSV rows and the sidecar metadata.
std::vector<DrawSet> read_draws(std::istream& csv, const nlohmann::json& metadata);

void save_draws(const std::filesystem::path& csv_path, const std::filesystem::path& json_path,
                std::span<const DrawSet> chains);
std::vector<DrawSet> load_draws(const std::filesystem::path& csv_path,
                                const std::filesystem::path& json_path);

}  // namespace relinfo::mcmc
