#pragma once

#include <cstddef>
#include <mutex>
#include <span>
#include <vector>

#include "relinfo/mcmc.hpp"
#include "relinfo/ri_measures.hpp"
#include "relinfo/sir.hpp"

namespace relinfo::sir {

struct SirModelSettings {
  SirPriors priors;
  /// Tolerance applies to the total observed log-likelihood over all households.
  IsSettings is;
  std::uint64_t bank_seed = 0x5152'0001ULL;
  SirParams initial{1.0, 0.0, 1.0};
  double null_initial_beta1 = -0.1;
};

/// Household data-augmentation model. theta = (beta0, beta1, gamma0); the
/// latent vector holds the unobserved infection times, household by household
/// in latent_positions() order.
///
/// observed_loglik uses a fixed bank of importance samples per household,
/// drawn once at construction, so it is a deterministic function of theta.
/// missing_conditional_logdensity normalises with a second, independent bank.
class SirModel final : public mcmc::Model {
 public:
  SirModel(std::vector<HouseholdRecord> observed, SirModelSettings settings = {});

  static SirParams params(std::span<const double> theta) { return {theta[0], theta[1], theta[2]}; }

  const std::vector<HouseholdRecord>& households() const { return households_; }
  const SirModelSettings& settings() const { return settings_; }
  std::size_t latent_size() const { return offsets_.back(); }
  std::span<const double> household_latent(std::span<const double> latent, std::size_t h) const {
    return latent.subspan(offsets_[h], offsets_[h + 1] - offsets_[h]);
  }
  /// Statistics summed over households (the log-likelihood is linear in them).
  HouseholdStats total_stats(std::span<const double> latent) const;
  std::vector<HouseholdRecord> augmented(std::span<const double> latent) const;

  mcmc::ChainState initial_state() const override;
  mcmc::ChainState initial_null_state() const override;
  double log_prior(std::span<const double> theta) const override;
  double complete_loglik(std::span<const double> theta, std::span<const double> latent) const override;
  mcmc::LogValue observed_loglik(std::span<const double> theta) const override;
  mcmc::MoveStats update_latent(std::span<const double> theta, std::vector<double>& latent,
                                Rng& rng) const override;
  mcmc::LogValue missing_conditional_logdensity(std::span<const double> theta,
                                                std::span<const double> latent) const override;
  bool null_predicate(std::span<const double> theta) const override { return theta[1] < 0.0; }
  std::vector<mcmc::ParameterBlock> parameter_blocks(bool null_constrained) const override;
  std::vector<std::string> summary_names() const override { return {"beta0", "beta1", "gamma0"}; }
  std::vector<double> summaries(std::span<const double> theta) const override {
    return {theta[0], theta[1], theta[2]};
  }

 private:
  mcmc::LogValue bank_loglik(const std::vector<ProposalBank>& banks, const SirParams& p) const;
  std::vector<ProposalBank> build_banks(std::uint64_t seed) const;

  std::vector<HouseholdRecord> households_;
  SirModelSettings settings_;
  std::vector<std::size_t> offsets_;
  std::vector<ProposalBank> banks_;
  mutable std::once_flag check_banks_once_;
  mutable std::vector<ProposalBank> check_banks_;
};

struct ScenarioSettings {
  /// Null draws beyond this count are thinned evenly (0 keeps all).
  std::size_t max_null_draws = 100;
  ri::RIOptions ri;
  /// Per new household, in the new-households scenario.
  IsSettings is{500, 20'000, 0.1};
};

/// Ratio samples fed to ri_compute together with the result, for persistence.
struct ScenarioOutcome {
  ri::RIInput samples;
  ri::RIResult result;
};

/// Missing data = the latent infection times. For null draw theta0 and joint
/// draw (theta_m, Y_mis_m):
///   w_m = [l_co(theta_m) - l_ob(theta_m)] - [l_co(theta0; Y_mis_m) - l_ob(theta0)]
ScenarioOutcome ri_scenario_infection_times(const SirModel& model,
                                            std::span<const mcmc::ParameterDraw> draws,
                                            std::span<const mcmc::ParameterDraw> null_draws,
                                            const ScenarioSettings& settings = {});

/// Missing data = removal times of `n_new` further households simulated from
/// each posterior draw; w_m sums per-household observed log-likelihood
/// differences, each estimated by importance sampling with one bank shared by
/// theta_m and every theta0.
ScenarioOutcome ri_scenario_new_households(std::span<const mcmc::ParameterDraw> draws,
                                           std::span<const mcmc::ParameterDraw> null_draws, std::size_t n_new,
                                           std::span<const int> member_template,
                                           const ScenarioSettings& settings, const Rng& rng);

struct NullOdds {
  double posterior_prob = 0.0;
  double prior_prob = 0.5;
  double ratio = 0.0;
  double posterior_se = 0.0;
};

/// Fraction of draws with beta1 < 0, against the analytic prior probability.
NullOdds posterior_null_probability(std::span<const mcmc::ParameterDraw> draws,
                                    const SirPriors& priors = {});

}  // namespace relinfo::sir
