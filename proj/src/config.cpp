#include "relinfo/config.hpp"

#include <fstream>
#include <set>
#include <stdexcept>

#include "relinfo/draw_io.hpp"

namespace relinfo {
namespace {

using nlohmann::json;

// Reads keys from one JSON object and rejects any it was not asked about.
class Section {
 public:
  Section(const json& j, std::string name) : j_(j), name_(std::move(name)) {
    if (!j_.is_object()) throw std::invalid_argument(name_ + " must be a JSON object");
  }

  template <typename T>
  void get(const char* key, T& out) {
    seen_.insert(key);
    if (!j_.contains(key)) return;
    try {
      out = j_.at(key).get<T>();
    } catch (const json::exception& e) {
      throw std::invalid_argument(name_ + "." + key + ": " + e.what());
    }
  }

  template <typename T>
  void get(const char* key, std::optional<T>& out) {
    seen_.insert(key);
    if (!j_.contains(key) || j_.at(key).is_null()) return;
    T v{};
    get(key, v);
    out = v;
  }

  bool has(const char* key) const { return j_.contains(key); }

  const json& child(const char* key) {
    seen_.insert(key);
    static const json empty = json::object();
    return j_.contains(key) ? j_.at(key) : empty;
  }

  void finish() const {
    for (const auto& [key, value] : j_.items()) {
      if (!seen_.count(key)) throw std::invalid_argument("unknown key " + name_ + "." + key);
    }
  }

 private:
  const json& j_;
  std::string name_;
  std::set<std::string> seen_;
};

template <typename T>
json optional_json(const std::optional<T>& v) {
  return v ? json(*v) : json(nullptr);
}

std::string resolve(const std::string& p, const std::filesystem::path& base) {
  const std::filesystem::path path(p);
  if (path.is_absolute() || base.empty()) return p;
  return (base / path).string();
}

void require_file(const std::optional<std::string>& p, const char* what) {
  if (p && !std::filesystem::exists(*p)) {
    throw std::invalid_argument(std::string(what) + " file not found: " + *p);
  }
}

}  // namespace

void RunConfig::validate() const {
  if (model != "sir" && model != "regression") {
    throw std::invalid_argument("model.kind must be \"sir\" or \"regression\", got \"" + model + "\"");
  }
  chain_config().validate();
  if (mcmc.chains == 0) throw std::invalid_argument("mcmc.chains must be >= 1");
  if (ri.null_fallback != "error" && ri.null_fallback != "constrained") {
    throw std::invalid_argument("ri.null_fallback must be \"error\" or \"constrained\"");
  }
  if (ri.n_null_min == 0) throw std::invalid_argument("ri.n_null_min must be >= 1");
  if (!(ri.is_tolerance > 0.0) || ri.is_initial_samples == 0 ||
      ri.is_max_samples < ri.is_initial_samples) {
    throw std::invalid_argument("ri importance-sampling settings are inconsistent");
  }

  if (model == "sir") {
    sir.truth.validate();
    sir.priors.validate();
    if (sir.members == 0) throw std::invalid_argument("model.members must be >= 1");
    if (sir.covariates != "alternating" && sir.covariates != "bernoulli") {
      throw std::invalid_argument("model.covariates must be \"alternating\" or \"bernoulli\"");
    }
    if (sir.is.initial_samples == 0 || sir.is.max_samples < sir.is.initial_samples ||
        !(sir.is.tolerance > 0.0)) {
      throw std::invalid_argument("model importance-sampling settings are inconsistent");
    }
    if (scenario.name != "infection_times" && scenario.name != "new_households" &&
        scenario.name != "compare") {
      throw std::invalid_argument("scenario " + scenario.name + " does not apply to the sir model");
    }
  } else {
    if (regression.k < 1) throw std::invalid_argument("model.k must be >= 1");
    if (!(regression.sigma > 0.0)) throw std::invalid_argument("model.sigma must be positive");
    if (regression.moves_per_sweep == 0) throw std::invalid_argument("model.moves_per_sweep must be >= 1");
    bernstein::monotone_mode_from_string(regression.monotone_mode);
    bernstein_prior().validate();
    if (scenario.name != "design") {
      throw std::invalid_argument("scenario " + scenario.name + " does not apply to the regression model");
    }
    static const std::set<std::string> known{"replicate-K", "partition-K", "duplicate-2K",
                                             "partition-2K", "empty"};
    for (const auto& d : scenario.designs) {
      if (!known.count(d)) throw std::invalid_argument("unknown design " + d);
    }
    if (scenario.points) {
      for (double x : *scenario.points) {
        if (!(x >= 0.0 && x <= 1.0)) throw std::invalid_argument("scenario.points must lie in [0, 1]");
      }
    }
  }
}

mcmc::ChainConfig RunConfig::chain_config() const {
  mcmc::ChainConfig c;
  c.n_iterations = mcmc.n_iterations;
  c.burn_in = mcmc.burn_in;
  c.thinning = mcmc.thinning;
  c.initial_scales = mcmc.initial_scales;
  c.adapt = mcmc.adapt;
  c.target_acceptance = mcmc.target_acceptance;
  c.seed = seed;
  return c;
}

bernstein::BernsteinPrior RunConfig::bernstein_prior() const {
  auto p = bernstein::BernsteinPrior::truncated_poisson(regression.order_mean, regression.n_max,
                                                        regression.tau1, regression.tau2);
  p.sigma_rate = regression.sigma_rate;
  return p;
}

RunConfig default_config(const std::string& model) {
  RunConfig c;
  c.model = model;
  if (model == "regression") c.scenario.name = "design";
  return c;
}

RunConfig config_from_json(const json& j, const std::filesystem::path& base_dir) {
  Section top(j, "config");
  std::string kind = "sir";
  const json& model_j = top.child("model");
  if (model_j.is_object() && model_j.contains("kind")) kind = model_j.at("kind").get<std::string>();
  RunConfig c = default_config(kind);
  top.get("seed", c.seed);

  Section m(model_j, "model");
  m.get("kind", c.model);
  if (c.model == "sir") {
    auto& s = c.sir;
    m.get("data", s.data);
    m.get("households", s.households);
    m.get("members", s.members);
    m.get("beta0", s.truth.beta0);
    m.get("beta1", s.truth.beta1);
    m.get("gamma0", s.truth.gamma0);
    m.get("covariates", s.covariates);
    m.get("prior_beta0_rate", s.priors.beta0_rate);
    m.get("prior_beta1_mean", s.priors.beta1_mean);
    m.get("prior_beta1_sd", s.priors.beta1_sd);
    m.get("prior_gamma0_rate", s.priors.gamma0_rate);
    m.get("is_initial_samples", s.is.initial_samples);
    m.get("is_max_samples", s.is.max_samples);
    m.get("is_tolerance", s.is.tolerance);
    if (s.data) s.data = resolve(*s.data, base_dir);
    require_file(s.data, "model.data");
  } else if (c.model == "regression") {
    auto& r = c.regression;
    m.get("data", r.data);
    m.get("k", r.k);
    m.get("slope", r.slope);
    m.get("sigma", r.sigma);
    m.get("order_mean", r.order_mean);
    m.get("n_max", r.n_max);
    m.get("tau1", r.tau1);
    m.get("tau2", r.tau2);
    m.get("monotone_mode", r.monotone_mode);
    m.get("moves_per_sweep", r.moves_per_sweep);
    m.get("sigma_rate", r.sigma_rate);
    if (r.data) r.data = resolve(*r.data, base_dir);
    require_file(r.data, "model.data");
  }
  m.finish();

  Section mc(top.child("mcmc"), "mcmc");
  mc.get("n_iterations", c.mcmc.n_iterations);
  mc.get("burn_in", c.mcmc.burn_in);
  mc.get("thinning", c.mcmc.thinning);
  mc.get("initial_scales", c.mcmc.initial_scales);
  mc.get("adapt", c.mcmc.adapt);
  mc.get("target_acceptance", c.mcmc.target_acceptance);
  mc.get("chains", c.mcmc.chains);
  mc.finish();

  Section ri(top.child("ri"), "ri");
  ri.get("n_null_min", c.ri.n_null_min);
  ri.get("max_null_draws", c.ri.max_null_draws);
  ri.get("bootstrap_replicates", c.ri.bootstrap_replicates);
  ri.get("plugin_correction", c.ri.plugin_correction);
  ri.get("is_initial_samples", c.ri.is_initial_samples);
  ri.get("is_max_samples", c.ri.is_max_samples);
  ri.get("is_tolerance", c.ri.is_tolerance);
  ri.get("null_fallback", c.ri.null_fallback);
  ri.finish();

  Section sc(top.child("scenario"), "scenario");
  sc.get("name", c.scenario.name);
  sc.get("n_new", c.scenario.n_new);
  sc.get("designs", c.scenario.designs);
  sc.get("points", c.scenario.points);
  sc.get("points_file", c.scenario.points_file);
  if (c.scenario.points_file) c.scenario.points_file = resolve(*c.scenario.points_file, base_dir);
  require_file(c.scenario.points_file, "scenario.points_file");
  sc.finish();

  top.finish();
  c.validate();
  return c;
}

json to_json(const RunConfig& c) {
  json model;
  model["kind"] = c.model;
  if (c.model == "sir") {
    const auto& s = c.sir;
    model["data"] = optional_json(s.data);
    model["households"] = s.households;
    model["members"] = s.members;
    model["beta0"] = s.truth.beta0;
    model["beta1"] = s.truth.beta1;
    model["gamma0"] = s.truth.gamma0;
    model["covariates"] = s.covariates;
    model["prior_beta0_rate"] = s.priors.beta0_rate;
    model["prior_beta1_mean"] = s.priors.beta1_mean;
    model["prior_beta1_sd"] = s.priors.beta1_sd;
    model["prior_gamma0_rate"] = s.priors.gamma0_rate;
    model["is_initial_samples"] = s.is.initial_samples;
    model["is_max_samples"] = s.is.max_samples;
    model["is_tolerance"] = s.is.tolerance;
  } else {
    const auto& r = c.regression;
    model["data"] = optional_json(r.data);
    model["k"] = r.k;
    model["slope"] = r.slope;
    model["sigma"] = r.sigma;
    model["order_mean"] = r.order_mean;
    model["n_max"] = r.n_max;
    model["tau1"] = r.tau1;
    model["tau2"] = r.tau2;
    model["monotone_mode"] = r.monotone_mode;
    model["moves_per_sweep"] = r.moves_per_sweep;
    model["sigma_rate"] = optional_json(r.sigma_rate);
  }
  json scenario{{"name", c.scenario.name},
                {"n_new", c.scenario.n_new},
                {"designs", c.scenario.designs},
                {"points", optional_json(c.scenario.points)},
                {"points_file", optional_json(c.scenario.points_file)}};
  return {{"seed", c.seed},
          {"model", model},
          {"mcmc",
           {{"n_iterations", c.mcmc.n_iterations},
            {"burn_in", c.mcmc.burn_in},
            {"thinning", c.mcmc.thinning},
            {"initial_scales", c.mcmc.initial_scales},
            {"adapt", c.mcmc.adapt},
            {"target_acceptance", c.mcmc.target_acceptance},
            {"chains", c.mcmc.chains}}},
          {"ri",
           {{"n_null_min", c.ri.n_null_min},
            {"max_null_draws", c.ri.max_null_draws},
            {"bootstrap_replicates", c.ri.bootstrap_replicates},
            {"plugin_correction", c.ri.plugin_correction},
            {"is_initial_samples", c.ri.is_initial_samples},
            {"is_max_samples", c.ri.is_max_samples},
            {"is_tolerance", c.ri.is_tolerance},
            {"null_fallback", c.ri.null_fallback}}},
          {"scenario", scenario}};
}

RunConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open config " + path.string());
  json j;
  try {
    j = json::parse(in);
  } catch (const json::parse_error& e) {
    throw ParseError(path.string() + ": " + e.what());
  }
  return config_from_json(j, path.parent_path());
}

}  // namespace relinfo
