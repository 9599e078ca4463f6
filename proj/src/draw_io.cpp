#include "relinfo/draw_io.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <istream>
#include <limits>
#include <map>
#include <ostream>
#include <sstream>

namespace relinfo {

std::string format_double(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

double parse_double(const std::string& s) {
  if (s.empty()) throw std::invalid_argument("empty numeric field");
  std::size_t pos = 0;
  const double v = std::stod(s, &pos);
  if (pos != s.size()) throw std::invalid_argument("not a number: '" + s + "'");
  return v;
}

}  // namespace relinfo

namespace relinfo::mcmc {
namespace {

std::string join(const std::vector<double>& v) {
  std::string s;
  for (std::size_t i = 0; i < v.size(); ++i) {
    if (i) s += ';';
    s += format_double(v[i]);
  }
  return s;
}

std::vector<double> split_list(const std::string& field) {
  std::vector<double> out;
  if (field.empty()) return out;
  std::stringstream ss(field);
  std::string item;
  while (std::getline(ss, item, ';')) out.push_back(parse_double(item));
  return out;
}

std::vector<std::string> split_csv(const std::string& line) {
  std::vector<std::string> out;
  std::string cur;
  for (char c : line) {
    if (c == ',') {
      out.push_back(cur);
      cur.clear();
    } else if (c != '\r') {
      cur += c;
    }
  }
  out.push_back(cur);
  return out;
}

constexpr const char* kHeader = "chain,iteration,log_prior,obs_loglik,obs_loglik_se,theta,latent";

nlohmann::json nan_to_null(double v) {
  return std::isfinite(v) ? nlohmann::json(v) : nlohmann::json(nullptr);
}

}  // namespace

void write_draws_csv(std::ostream& out, std::span<const DrawSet> chains) {
  out << kHeader << '\n';
  for (const auto& c : chains) {
    for (const auto& d : c.draws) {
      out << c.config.chain_index << ',' << d.iteration << ',' << format_double(d.log_prior) << ','
          << format_double(d.obs_loglik) << ',' << format_double(d.obs_loglik_se) << ','
          << join(d.theta) << ',' << join(d.latent) << '\n';
    }
  }
}

nlohmann::json draws_metadata(std::span<const DrawSet> chains) {
  nlohmann::json j;
  j["format"] = "relinfo-draws/1";
  j["chains"] = nlohmann::json::array();
  for (const auto& c : chains) {
    nlohmann::json cj;
    const auto& cfg = c.config;
    cj["chain_index"] = cfg.chain_index;
    cj["seed"] = cfg.seed;
    cj["n_iterations"] = cfg.n_iterations;
    cj["burn_in"] = cfg.burn_in;
    cj["thinning"] = cfg.thinning;
    cj["adapt"] = cfg.adapt;
    cj["target_acceptance"] = cfg.target_acceptance;
    cj["initial_scales"] = cfg.initial_scales;
    cj["null_constrained"] = cfg.null_constrained;
    cj["n_draws"] = c.draws.size();
    cj["blocks"] = nlohmann::json::array();
    for (const auto& b : c.blocks) {
      cj["blocks"].push_back(
          {{"name", b.name}, {"acceptance_rate", b.acceptance_rate}, {"final_scale", b.final_scale}});
    }
    cj["latent_acceptance"] = c.latent_acceptance;
    cj["extra_acceptance"] = c.extra_acceptance;
    cj["summary_names"] = c.summary_names;
    cj["ess"] = nlohmann::json::array();
    for (double e : c.ess) cj["ess"].push_back(nan_to_null(e));
    cj["scale_trace_iterations"] = c.scale_trace_iterations;
    cj["scale_trace"] = c.scale_trace;
    j["chains"].push_back(std::move(cj));
  }
  return j;
}

std::vector<DrawSet> read_draws(std::istream& csv, const nlohmann::json& metadata) {
  if (metadata.value("format", std::string{}) != "relinfo-draws/1") {
    throw ParseError("draws metadata has an unknown or missing format tag");
  }
  std::vector<DrawSet> chains;
  std::map<std::uint64_t, std::size_t> by_index;
  for (const auto& cj : metadata.at("chains")) {
    DrawSet c;
    auto& cfg = c.config;
    cfg.chain_index = cj.at("chain_index").get<std::uint64_t>();
    cfg.seed = cj.at("seed").get<std::uint64_t>();
    cfg.n_iterations = cj.at("n_iterations").get<std::size_t>();
    cfg.burn_in = cj.at("burn_in").get<std::size_t>();
    cfg.thinning = cj.at("thinning").get<std::size_t>();
    cfg.adapt = cj.at("adapt").get<bool>();
    cfg.target_acceptance = cj.at("target_acceptance").get<double>();
    cfg.initial_scales = cj.at("initial_scales").get<std::vector<double>>();
    cfg.null_constrained = cj.at("null_constrained").get<bool>();
    for (const auto& bj : cj.at("blocks")) {
      c.blocks.push_back({bj.at("name").get<std::string>(), bj.at("acceptance_rate").get<double>(),
                          bj.at("final_scale").get<double>()});
    }
    c.latent_acceptance = cj.at("latent_acceptance").get<double>();
    c.extra_acceptance = cj.at("extra_acceptance").get<double>();
    c.summary_names = cj.at("summary_names").get<std::vector<std::string>>();
    for (const auto& e : cj.at("ess")) {
      c.ess.push_back(e.is_null() ? std::numeric_limits<double>::quiet_NaN() : e.get<double>());
    }
    c.scale_trace_iterations = cj.at("scale_trace_iterations").get<std::vector<std::size_t>>();
    c.scale_trace = cj.at("scale_trace").get<std::vector<std::vector<double>>>();
    by_index[cfg.chain_index] = chains.size();
    chains.push_back(std::move(c));
  }

  std::string line;
  std::size_t row = 1;
  if (!std::getline(csv, line)) throw ParseError("draws CSV is empty");
  if (!line.empty() && line.back() == '\r') line.pop_back();
  if (line != kHeader) throw ParseError("draws CSV row 1: unexpected header '" + line + "'");
  while (std::getline(csv, line)) {
    ++row;
    if (line.empty()) continue;
    const auto f = split_csv(line);
    try {
      if (f.size() != 7) {
        throw std::invalid_argument("expected 7 fields, found " + std::to_string(f.size()));
      }
      const auto chain = static_cast<std::uint64_t>(std::stoull(f[0]));
      auto it = by_index.find(chain);
      if (it == by_index.end()) {
        throw std::invalid_argument("chain " + f[0] + " not described in metadata");
      }
      ParameterDraw d;
      d.iteration = static_cast<std::size_t>(std::stoull(f[1]));
      d.log_prior = parse_double(f[2]);
      d.obs_loglik = parse_double(f[3]);
      d.obs_loglik_se = parse_double(f[4]);
      d.theta = split_list(f[5]);
      d.latent = split_list(f[6]);
      chains[it->second].draws.push_back(std::move(d));
    } catch (const std::exception& e) {
      throw ParseError("draws CSV row " + std::to_string(row) + ": " + e.what());
    }
  }
  for (const auto& c : chains) {
    if (c.draws.size() != (c.config.n_iterations - c.config.burn_in) / c.config.thinning) {
      throw ParseError("chain " + std::to_string(c.config.chain_index) + " has " +
                       std::to_string(c.draws.size()) + " rows but its config implies " +
                       std::to_string((c.config.n_iterations - c.config.burn_in) /
                                      c.config.thinning));
    }
  }
  return chains;
}

void save_draws(const std::filesystem::path& csv_path, const std::filesystem::path& json_path,
                std::span<const DrawSet> chains) {
  std::ofstream csv(csv_path, std::ios::binary);
  if (!csv) throw std::runtime_error("cannot write " + csv_path.string());
  write_draws_csv(csv, chains);
  std::ofstream js(json_path, std::ios::binary);
  if (!js) throw std::runtime_error("cannot write " + json_path.string());
  js << draws_metadata(chains).dump(2) << '\n';
}

std::vector<DrawSet> load_draws(const std::filesystem::path& csv_path,
                                const std::filesystem::path& json_path) {
  std::ifstream js(json_path);
  if (!js) throw std::runtime_error("cannot read " + json_path.string());
  nlohmann::json meta;
  try {
    meta = nlohmann::json::parse(js);
  } catch (const nlohmann::json::parse_error& e) {
    throw ParseError(json_path.string() + ": " + e.what());
  }
  std::ifstream csv(csv_path);
  if (!csv) throw std::runtime_error("cannot read " + csv_path.string());
  return read_draws(csv, meta);
}

}  // namespace relinfo::mcmc
