// relinfo: relative information of observed data for Bayesian tests.
//
//   relinfo simulate --config run.json --out results/
//   relinfo fit      --config run.json --out results/ [--chains 4] [--scenario compare]
//   relinfo ri       --config run.json --out results/ [--scenario new_households]
//   relinfo report   --out results/
//
// The output directory defaults to $RELINFO_OUT, then ./relinfo-out.

#include <cstdlib>
#include <iostream>

#include <CLI11.hpp>

#include "relinfo/commands.hpp"
#include "relinfo/draw_io.hpp"

namespace {

struct Common {
  std::string config_path;
  std::string model = "sir";
  std::optional<std::uint64_t> seed;
  std::string out;
  std::optional<std::string> scenario;
  std::optional<std::size_t> chains;
};

relinfo::RunConfig resolve_config(const Common& o) {
  relinfo::RunConfig c = o.config_path.empty() ? relinfo::default_config(o.model)
                                               : relinfo::load_config(o.config_path);
  if (o.seed) c.seed = *o.seed;
  if (o.scenario) c.scenario.name = *o.scenario;
  if (o.chains) c.mcmc.chains = *o.chains;
  c.validate();
  return c;
}

void add_common(CLI::App* cmd, Common& o, bool with_config = true) {
  if (with_config) {
    cmd->add_option("--config", o.config_path, "JSON run configuration")->check(CLI::ExistingFile);
    cmd->add_option("--model", o.model, "Model when no config is given")->check(CLI::IsMember({"sir", "regression"}));
    cmd->add_option("--seed", o.seed, "Overrides the config seed");
    cmd->add_option("--scenario", o.scenario, "infection_times, new_households, compare or design");
    cmd->add_option("--chains", o.chains, "Number of parallel chains")->check(CLI::PositiveNumber);
  }
  cmd->add_option("--out", o.out, "Output directory (default $RELINFO_OUT or ./relinfo-out)");
}

std::string out_dir(const Common& o) {
  if (!o.out.empty()) return o.out;
  if (const char* env = std::getenv("RELINFO_OUT"); env && *env) return env;
  return "relinfo-out";
}

void print_fit(const std::vector<relinfo::mcmc::DrawSet>& chains) {
  for (std::size_t k = 0; k < chains.size(); ++k) {
    const auto& ch = chains[k];
    std::cout << "chain " << k << ": " << ch.draws.size() << " draws";
    for (const auto& b : ch.blocks) std::cout << ", " << b.name << " acceptance " << b.acceptance_rate;
    for (std::size_t i = 0; i < ch.summary_names.size(); ++i) {
      std::cout << ", ESS(" << ch.summary_names[i] << ") " << ch.ess[i];
    }
    std::cout << "\n";
  }
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Relative information of observed data in Bayesian hypothesis tests"};
  app.require_subcommand(1);
  Common simulate_opts, fit_opts, ri_opts, report_opts;
  auto* simulate = app.add_subcommand("simulate", "Simulate a dataset and its truth sidecar");
  add_common(simulate, simulate_opts);
  auto* fit = app.add_subcommand("fit", "Run the sampler and persist draws");
  add_common(fit, fit_opts);
  auto* ri = app.add_subcommand("ri", "Compute BI3/BI4 for the configured scenarios");
  add_common(ri, ri_opts);
  auto* report = app.add_subcommand("report", "Re-render and print an existing report");
  add_common(report, report_opts, false);

  CLI11_PARSE(app, argc, argv);

  try {
    if (simulate->parsed()) {
      const auto dir = out_dir(simulate_opts);
      relinfo::cmd_simulate(resolve_config(simulate_opts), dir);
      std::cout << "wrote dataset to " << dir << "\n";
    } else if (fit->parsed()) {
      const auto dir = out_dir(fit_opts);
      const auto config = resolve_config(fit_opts);
      print_fit(relinfo::cmd_fit(config, dir));
      if (fit_opts.scenario) std::cout << relinfo::summarize(relinfo::cmd_ri(config, dir));
    } else if (ri->parsed()) {
      std::cout << relinfo::summarize(relinfo::cmd_ri(resolve_config(ri_opts), out_dir(ri_opts)));
    } else if (report->parsed()) {
      std::cout << relinfo::summarize(relinfo::cmd_report(out_dir(report_opts)));
    }
  } catch (const relinfo::mcmc::InsufficientNullDrawsError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 3;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
