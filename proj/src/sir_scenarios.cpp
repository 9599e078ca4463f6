#include "relinfo/sir_model.hpp"

#include <cmath>

namespace relinfo::sir {
namespace {

ri::ObservedLodSamples observed_samples(std::span<const mcmc::ParameterDraw> draws) {
  ri::ObservedLodSamples ell;
  std::vector<double> se;
  for (const auto& d : draws) {
    ell.values.push_back(d.obs_loglik);
    se.push_back(d.obs_loglik_se);
  }
  ell.se = std::move(se);
  return ell;
}

// Positions in the null-draw list that are used, thinned evenly to max_count.
std::vector<std::size_t> selected_nulls(std::span<const mcmc::ParameterDraw> null_draws,
                                        std::size_t max_count) {
  if (null_draws.empty()) throw InsufficientSamplesError("no null draws");
  std::vector<std::size_t> all(null_draws.size());
  for (std::size_t j = 0; j < all.size(); ++j) all[j] = j;
  return mcmc::thin_evenly(all, max_count);
}

}  // namespace

ScenarioOutcome ri_scenario_infection_times(const SirModel& model,
                                            std::span<const mcmc::ParameterDraw> draws,
                                            std::span<const mcmc::ParameterDraw> null_draws,
                                            const ScenarioSettings& settings) {
  const auto nulls = selected_nulls(null_draws, settings.max_null_draws);
  ScenarioOutcome out;
  out.samples.ell = observed_samples(draws);

  std::vector<HouseholdStats> stats(draws.size());
  std::vector<double> base(draws.size());
  for (std::size_t m = 0; m < draws.size(); ++m) {
    stats[m] = model.total_stats(draws[m].latent);
    base[m] = loglik_from_stats(SirModel::params(draws[m].theta), stats[m]) - draws[m].obs_loglik;
  }
  for (std::size_t idx : nulls) {
    const auto& null_draw = null_draws[idx];
    const SirParams p0 = SirModel::params(null_draw.theta);
    ri::ConditionalRatioSamples w;
    w.null_draw_id = idx;
    w.values.resize(draws.size());
    for (std::size_t m = 0; m < draws.size(); ++m) {
      w.values[m] = base[m] - (loglik_from_stats(p0, stats[m]) - null_draw.obs_loglik);
    }
    out.samples.ratios.push_back(std::move(w));
  }
  out.result = ri::ri_compute(out.samples.ell, out.samples.ratios, settings.ri);
  return out;
}

ScenarioOutcome ri_scenario_new_households(std::span<const mcmc::ParameterDraw> draws,
                                           std::span<const mcmc::ParameterDraw> null_draws, std::size_t n_new,
                                           std::span<const int> member_template,
                                           const ScenarioSettings& settings, const Rng& rng) {
  const auto nulls = selected_nulls(null_draws, settings.max_null_draws);
  if (member_template.empty()) throw std::invalid_argument("member template is empty");
  ScenarioOutcome out;
  out.samples.ell = observed_samples(draws);
  for (std::size_t idx : nulls) {
    out.samples.ratios.push_back({idx, std::vector<double>(draws.size(), 0.0)});
  }
  std::vector<SirParams> null_params;
  for (std::size_t idx : nulls) null_params.push_back(SirModel::params(null_draws[idx].theta));

  for (std::size_t m = 0; m < draws.size(); ++m) {
    const SirParams pm = SirModel::params(draws[m].theta);
    const Rng draw_rng = rng.split(m);
    for (std::size_t h = 0; h < n_new; ++h) {
      // Household h of draw m gets its own stream, so the first k households
      // are the same for every n_new >= k.
      Rng sim_rng = draw_rng.split(2 * h);
      Rng is_rng = draw_rng.split(2 * h + 1);
      const HouseholdRecord sim = simulate_household(pm, member_template, sim_rng);
      ProposalBank bank(sim.observed());
      bank.grow_to_tolerance(pm, settings.is, is_rng);
      const double at_draw = bank.estimate(pm).value;
      for (std::size_t j = 0; j < nulls.size(); ++j) {
        out.samples.ratios[j].values[m] += at_draw - bank.estimate(null_params[j]).value;
      }
    }
  }
  out.result = ri::ri_compute(out.samples.ell, out.samples.ratios, settings.ri);
  return out;
}

NullOdds posterior_null_probability(std::span<const mcmc::ParameterDraw> draws, const SirPriors& priors) {
  if (draws.empty()) throw InsufficientSamplesError("no draws");
  std::size_t hits = 0;
  for (const auto& d : draws) hits += d.theta[1] < 0.0 ? 1 : 0;
  NullOdds odds;
  const auto n = static_cast<double>(draws.size());
  odds.posterior_prob = static_cast<double>(hits) / n;
  odds.posterior_se = std::sqrt(odds.posterior_prob * (1.0 - odds.posterior_prob) / n);
  odds.prior_prob = priors.null_probability();
  odds.ratio = odds.posterior_prob / odds.prior_prob;
  return odds;
}

}  // namespace relinfo::sir
