#include "relinfo/commands.hpp"

#include <chrono>
#include <fstream>
#include <sstream>
#include <stdexcept>

#include "relinfo/draw_io.hpp"
#include "relinfo/sir_model.hpp"

namespace relinfo {
namespace {

namespace fs = std::filesystem;
using nlohmann::json;

// Stream ids for Rng(seed, stream). Chains take streams 0..chains-1.
constexpr std::uint64_t kSimulateStream = 0x100000;
constexpr std::uint64_t kBankStream = 0x100001;
constexpr std::uint64_t kTemplateStream = 0x100002;
constexpr std::uint64_t kNewHouseholdStream = 0x100003;
constexpr std::uint64_t kDesignStream = 0x100004;
constexpr std::uint64_t kBootstrapStream = 0x100005;
constexpr std::uint64_t kConstrainedChainBase = 0x200000;

void write_text(const fs::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  out << text;
  if (!out) throw std::runtime_error("write failed for " + path.string());
}

json read_json(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open " + path.string());
  try {
    return json::parse(in);
  } catch (const json::parse_error& e) {
    throw ParseError(path.string() + ": " + e.what());
  }
}

std::string trim_cr(std::string s) {
  if (!s.empty() && s.back() == '\r') s.pop_back();
  return s;
}

fs::path sir_data_path(const RunConfig& c, const fs::path& out) {
  return c.sir.data ? fs::path(*c.sir.data) : out / "households.json";
}

fs::path regression_data_path(const RunConfig& c, const fs::path& out) {
  return c.regression.data ? fs::path(*c.regression.data) : out / "data.csv";
}

std::vector<sir::HouseholdRecord> load_households(const fs::path& path) {
  try {
    return sir::households_from_json(read_json(path));
  } catch (const std::invalid_argument& e) {
    throw ParseError(path.string() + ": " + e.what());
  }
}

bernstein::RegressionData load_regression(const RunConfig& c, const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open " + path.string());
  auto data = read_regression_csv(in, path.string());
  if (!c.regression.sigma_rate) data.sigma_known = c.regression.sigma;
  return data;
}

sir::SirModelSettings sir_settings(const RunConfig& c) {
  sir::SirModelSettings s;
  s.priors = c.sir.priors;
  s.is = c.sir.is;
  s.bank_seed = Rng(c.seed, kBankStream).key();
  return s;
}

std::unique_ptr<bernstein::BernsteinModel> regression_model(const RunConfig& c,
                                                            bernstein::RegressionData data,
                                                            bool constrained) {
  bernstein::RjSettings rj;
  rj.null_constrained = constrained;
  return std::make_unique<bernstein::BernsteinModel>(
      std::move(data), c.bernstein_prior(), c.regression.sigma,
      bernstein::monotone_mode_from_string(c.regression.monotone_mode), rj, c.regression.moves_per_sweep);
}

ri::RIOptions ri_options(const RunConfig& c) {
  ri::RIOptions o;
  o.bootstrap_replicates = c.ri.bootstrap_replicates;
  o.bootstrap_seed = Rng(c.seed, kBootstrapStream).key();
  o.plugin_correction = c.ri.plugin_correction;
  return o;
}

// Null draws for E0: the filtered unconditional chain, or a constrained
// rerun when filtering leaves too few and the config allows it.
struct NullSelection {
  std::vector<mcmc::ParameterDraw> draws;
  std::vector<std::size_t> ids;  ///< draws.csv row (filtered) or null_draws.csv row (constrained)
  NullSummary summary;
  std::vector<mcmc::DrawSet> constrained_chains;
};

NullSelection select_nulls(const RunConfig& c, const mcmc::Model& model,
                           const mcmc::Model& constrained_model,
                           std::span<const mcmc::ParameterDraw> pooled, const fs::path& out,
                           std::vector<std::string>& warnings) {
  NullSelection sel;
  std::vector<std::size_t> available;
  try {
    const auto nulls = mcmc::filter_null(pooled, model, c.ri.n_null_min);
    available = nulls.indices;
    sel.summary.posterior_fraction = nulls.posterior_probability;
    sel.draws = {pooled.begin(), pooled.end()};
  } catch (const mcmc::InsufficientNullDrawsError& e) {
    if (c.ri.null_fallback != "constrained") throw;
    std::size_t hits = 0;
    for (const auto& d : pooled) hits += model.null_predicate(d.theta) ? 1 : 0;
    sel.summary.posterior_fraction = static_cast<double>(hits) / static_cast<double>(pooled.size());
    warnings.push_back(std::string(e.what()) + " Using the constrained-chain fallback.");
    auto cc = c.chain_config();
    cc.null_constrained = true;
    cc.chain_index = kConstrainedChainBase;
    sel.constrained_chains = mcmc::run_chains(constrained_model, cc, c.mcmc.chains);
    mcmc::save_draws(out / "null_draws.csv", out / "null_draws.json", sel.constrained_chains);
    sel.draws = mcmc::pool_draws(sel.constrained_chains);
    available.resize(sel.draws.size());
    for (std::size_t i = 0; i < available.size(); ++i) available[i] = i;
    sel.summary.source = "constrained";
  }
  sel.summary.available = available.size();
  sel.ids = mcmc::thin_evenly(available, c.ri.max_null_draws);
  sel.summary.used = sel.ids.size();
  sel.draws = mcmc::gather(sel.draws, sel.ids);
  return sel;
}

// Scenario functions number null draws by position in the list they were
// given; persisted files use the row of the draws file instead.
void relabel(std::span<const std::size_t> ids, ri::RIInput& samples, ri::RIResult& result) {
  for (auto& w : samples.ratios) w.null_draw_id = ids[w.null_draw_id];
  for (auto& id : result.null_draw_ids) id = ids[id];
}

struct NamedOutcome {
  std::string name;
  ri::RIInput samples;
};

void write_ri_files(const fs::path& out, const Report& report, std::span<const NamedOutcome> outcomes) {
  std::ostringstream comp;
  comp << "scenario,component,null_draw_id,value\n";
  std::ostringstream ratios;
  ratios << "scenario,null_draw_id,draw,w\n";
  for (std::size_t s = 0; s < outcomes.size(); ++s) {
    const auto& res = report.results[s].result;
    comp << outcomes[s].name << ",v_lod,," << format_double(res.v_lod) << "\n";
    for (std::size_t j = 0; j < res.v_ratio_per_null.size(); ++j) {
      comp << outcomes[s].name << ",v_ratio," << res.null_draw_ids[j] << ","
           << format_double(res.v_ratio_per_null[j]) << "\n";
    }
    for (const auto& w : outcomes[s].samples.ratios) {
      for (std::size_t m = 0; m < w.values.size(); ++m) {
        ratios << outcomes[s].name << "," << w.null_draw_id << "," << m << "," << format_double(w.values[m]) << "\n";
      }
    }
  }
  write_text(out / "components.csv", comp.str());
  write_text(out / "ratios.csv", ratios.str());
  write_text(out / "report.json", to_json(report).dump(2) + "\n");
  write_text(out / "report.svg", render_svg(report));
}

void check_draws_match(const std::vector<mcmc::DrawSet>& chains, const RunConfig& c) {
  if (chains.empty()) throw std::runtime_error("draws file holds no chains");
  const std::size_t expected = c.model == "sir" ? 3 : 0;
  for (const auto& ch : chains) {
    for (const auto& d : ch.draws) {
      if (expected && d.theta.size() != expected) {
        throw std::runtime_error("draws do not match the sir model (theta has " +
                                 std::to_string(d.theta.size()) + " entries)");
      }
      if (!expected && d.theta.size() < 3) {
        throw std::runtime_error("draws do not match the regression model");
      }
    }
  }
}

}  // namespace

std::vector<double> named_design(const std::string& name, int k) {
  if (name == "replicate-K") return bernstein::replicate_design(k);
  if (name == "partition-K") return bernstein::partition_design((k + 1) / 2);
  if (name == "duplicate-2K") return bernstein::duplicate_design(bernstein::replicate_design(k));
  if (name == "partition-2K") return bernstein::partition_design(k + 1);
  if (name == "empty") return {};
  throw std::invalid_argument("unknown design " + name);
}

bernstein::RegressionData read_regression_csv(std::istream& in, const std::string& source) {
  bernstein::RegressionData data;
  std::string line;
  if (!std::getline(in, line) || trim_cr(line) != "x,y") {
    throw ParseError(source + " row 1: expected header x,y");
  }
  std::size_t row = 1;
  while (std::getline(in, line)) {
    ++row;
    line = trim_cr(line);
    if (line.empty()) continue;
    const auto comma = line.find(',');
    if (comma == std::string::npos || line.find(',', comma + 1) != std::string::npos) {
      throw ParseError(source + " row " + std::to_string(row) + ": expected two fields");
    }
    bernstein::RegressionPoint p;
    try {
      p.x = parse_double(line.substr(0, comma));
      p.y = parse_double(line.substr(comma + 1));
    } catch (const std::invalid_argument& e) {
      throw ParseError(source + " row " + std::to_string(row) + ": " + e.what());
    }
    if (!(p.x >= 0.0 && p.x <= 1.0)) {
      throw ParseError(source + " row " + std::to_string(row) + ": x must lie in [0, 1]");
    }
    if (!std::isfinite(p.y)) throw ParseError(source + " row " + std::to_string(row) + ": y is not finite");
    data.points.push_back(p);
  }
  return data;
}

void write_regression_csv(std::ostream& out, const bernstein::RegressionData& data) {
  out << "x,y\n";
  for (const auto& p : data.points) out << format_double(p.x) << "," << format_double(p.y) << "\n";
}

std::vector<double> read_points_csv(std::istream& in, const std::string& source) {
  std::vector<double> x;
  std::string line;
  std::size_t row = 0;
  while (std::getline(in, line)) {
    ++row;
    line = trim_cr(line);
    if (line.empty() || (row == 1 && line == "x")) continue;
    try {
      x.push_back(parse_double(line));
    } catch (const std::invalid_argument& e) {
      throw ParseError(source + " row " + std::to_string(row) + ": " + e.what());
    }
    if (!(x.back() >= 0.0 && x.back() <= 1.0)) {
      throw ParseError(source + " row " + std::to_string(row) + ": x must lie in [0, 1]");
    }
  }
  return x;
}

void cmd_simulate(const RunConfig& c, const fs::path& out) {
  c.validate();
  fs::create_directories(out);
  const Rng root(c.seed, kSimulateStream);
  if (c.model == "sir") {
    Rng template_rng(c.seed, kTemplateStream);
    const auto z = c.sir.covariates == "bernoulli" ? sir::bernoulli_covariates(c.sir.members, template_rng)
                                                   : sir::alternating_covariates(c.sir.members);
    std::vector<sir::HouseholdRecord> full;
    std::vector<sir::HouseholdRecord> observed;
    for (std::size_t h = 0; h < c.sir.households; ++h) {
      Rng rng = root.split(h);
      full.push_back(sir::simulate_household(c.sir.truth, z, rng));
      observed.push_back(full.back().observed());
    }
    write_text(out / "households.json", sir::to_json(observed).dump(2) + "\n");
    const json truth{{"beta0", c.sir.truth.beta0},
                     {"beta1", c.sir.truth.beta1},
                     {"gamma0", c.sir.truth.gamma0},
                     {"households", sir::to_json(full)}};
    write_text(out / "truth.json", truth.dump(2) + "\n");
  } else {
    Rng rng = root.split(0);
    bernstein::RegressionData data;
    std::ostringstream truth;
    truth << "x,F\n";
    for (double x : bernstein::replicate_design(c.regression.k)) {
      const double f = c.regression.slope * x;
      data.points.push_back({x, f + c.regression.sigma * rng.normal()});
      truth << format_double(x) << "," << format_double(f) << "\n";
    }
    std::ostringstream csv;
    write_regression_csv(csv, data);
    write_text(out / "data.csv", csv.str());
    write_text(out / "truth.csv", truth.str());
  }
}

std::vector<mcmc::DrawSet> cmd_fit(const RunConfig& c, const fs::path& out) {
  c.validate();
  fs::create_directories(out);
  std::vector<mcmc::DrawSet> chains;
  if (c.model == "sir") {
    const sir::SirModel model(load_households(sir_data_path(c, out)), sir_settings(c));
    chains = mcmc::run_chains(model, c.chain_config(), c.mcmc.chains);
  } else {
    const auto model = regression_model(c, load_regression(c, regression_data_path(c, out)), false);
    chains = mcmc::run_chains(*model, c.chain_config(), c.mcmc.chains);
  }
  mcmc::save_draws(out / "draws.csv", out / "draws.json", chains);
  return chains;
}

Report cmd_ri(const RunConfig& c, const fs::path& out) {
  c.validate();
  const auto start = std::chrono::steady_clock::now();
  const auto chains = mcmc::load_draws(out / "draws.csv", out / "draws.json");
  check_draws_match(chains, c);
  const auto pooled = mcmc::pool_draws(chains);

  Report report;
  report.model = c.model;
  report.config = to_json(c);
  for (std::size_t k = 0; k < chains.size(); ++k) {
    report.diagnostics.push_back(diagnostics_of(chains[k], "chain " + std::to_string(k)));
  }
  std::vector<NamedOutcome> outcomes;

  if (c.model == "sir") {
    const sir::SirModel model(load_households(sir_data_path(c, out)), sir_settings(c));
    auto sel = select_nulls(c, model, model, pooled, out, report.warnings);
    for (std::size_t k = 0; k < sel.constrained_chains.size(); ++k) {
      report.diagnostics.push_back(diagnostics_of(sel.constrained_chains[k], "constrained " + std::to_string(k)));
    }
    sir::ScenarioSettings s;
    s.max_null_draws = 0;
    s.ri = ri_options(c);
    s.is = {c.ri.is_initial_samples, c.ri.is_max_samples, c.ri.is_tolerance};

    auto add = [&](std::string name, std::optional<std::size_t> n_new, sir::ScenarioOutcome o) {
      relabel(sel.ids, o.samples, o.result);
      report.results.push_back({name, n_new, std::nullopt, o.result});
      outcomes.push_back({std::move(name), std::move(o.samples)});
    };
    if (c.scenario.name == "infection_times" || c.scenario.name == "compare") {
      add("infection_times", std::nullopt, sir::ri_scenario_infection_times(model, pooled, sel.draws, s));
    }
    if (c.scenario.name == "new_households" || c.scenario.name == "compare") {
      Rng template_rng(c.seed, kTemplateStream);
      const auto z = c.sir.covariates == "bernoulli" ? sir::bernoulli_covariates(c.sir.members, template_rng)
                                                     : sir::alternating_covariates(c.sir.members);
      add("new_households", c.scenario.n_new,
          sir::ri_scenario_new_households(pooled, sel.draws, c.scenario.n_new, z, s,
                                          Rng(c.seed, kNewHouseholdStream)));
    }
    const auto odds = sir::posterior_null_probability(pooled, c.sir.priors);
    report.odds = {"beta1 < 0", odds.posterior_prob, odds.prior_prob, odds.ratio,
                   odds.posterior_se, odds.posterior_prob, false};
    report.nulls = sel.summary;
  } else {
    auto data = load_regression(c, regression_data_path(c, out));
    const auto model = regression_model(c, data, false);
    const auto constrained = regression_model(c, data, true);
    auto sel = select_nulls(c, *model, *constrained, pooled, out, report.warnings);
    for (std::size_t k = 0; k < sel.constrained_chains.size(); ++k) {
      report.diagnostics.push_back(diagnostics_of(sel.constrained_chains[k], "constrained " + std::to_string(k)));
    }
    std::vector<std::pair<std::string, std::vector<double>>> designs;
    for (const auto& name : c.scenario.designs) designs.emplace_back(name, named_design(name, c.regression.k));
    if (c.scenario.points) designs.emplace_back("custom", *c.scenario.points);
    if (c.scenario.points_file) {
      std::ifstream in(*c.scenario.points_file);
      designs.emplace_back("custom_file", read_points_csv(in, *c.scenario.points_file));
    }
    const Rng rng(c.seed, kDesignStream);
    for (auto& [name, points] : designs) {
      auto o = bernstein::ri_design(pooled, sel.draws, points, c.regression.sigma, rng, ri_options(c));
      relabel(sel.ids, o.samples, o.result);
      report.results.push_back({name, std::nullopt, points, o.result});
      outcomes.push_back({name, std::move(o.samples)});
    }
    const auto mode = bernstein::monotone_mode_from_string(c.regression.monotone_mode);
    const auto odds = bernstein::monotone_odds(pooled, c.bernstein_prior(), mode);
    report.odds = {"monotone (" + c.regression.monotone_mode + ")", odds.posterior_prob, odds.prior_prob,
                   odds.ratio, std::sqrt(odds.posterior_prob * (1 - odds.posterior_prob) / pooled.size()),
                   odds.posterior_upper, odds.zero_count};
    report.nulls = sel.summary;
  }

  report.choose_preferred();
  report.wall_clock_seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  write_ri_files(out, report, outcomes);
  return report;
}

Report cmd_report(const fs::path& out) {
  Report r = report_from_json(read_json(out / "report.json"));
  write_text(out / "report.svg", render_svg(r));
  return r;
}

}  // namespace relinfo
