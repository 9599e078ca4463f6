#pragma once

// Household S-I-R epidemic observed to extinction.
//
// Within a household of m members, susceptible i is infected at rate
// beta0 * exp(beta1 * z_i) * I(t-), and each infectious member is removed at
// rate gamma0. Member infection and removal times are the counting-process
// jumps; only removal times (and the index case's infection at t = 0) are
// observed, so the infection times of the other infected members are latent.

#include <cstddef>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

#include "relinfo/mcmc.hpp"
#include "relinfo/rng.hpp"

namespace relinfo::sir {

class ZeroLikelihoodError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct SirParams {
  double beta0 = 1.0;   ///< infection rate per infectious contact
  double beta1 = 0.0;   ///< log effect of the covariate on susceptibility
  double gamma0 = 1.0;  ///< removal rate

  void validate() const;
};

struct SirPriors {
  double beta0_rate = 1.0;
  double beta1_mean = 0.0;
  double beta1_sd = 1.0;
  double gamma0_rate = 1.0;

  void validate() const;
  double log_density(const SirParams& p) const;
  /// Prior probability of beta1 < 0.
  double null_probability() const;
};

struct Member {
  int id = 0;
  int z = 0;
  std::optional<double> infection_time;
  std::optional<double> removal_time;

  bool operator==(const Member&) const = default;
};

struct HouseholdRecord {
  std::vector<Member> members;
  int index_member = 0;

  /// Position of the index case in `members`.
  std::size_t index_position() const;
  /// Positions of non-index members with a removal time, whose infection
  /// times form the latent data (in member order).
  std::vector<std::size_t> latent_positions() const;
  /// Invariant check. `fully_augmented` additionally requires every removed
  /// member to carry an infection time.
  void validate(bool fully_augmented) const;
  /// Copy with non-index infection times removed.
  HouseholdRecord observed() const;

  bool operator==(const HouseholdRecord&) const = default;
};

/// Exact event-by-event (Gillespie) simulation to extinction. Member 0 is the
/// index case, infected at time 0; ids are 1..m.
HouseholdRecord simulate_household(const SirParams& params, std::span<const int> z, Rng& rng);

/// Covariate templates: alternating 0,1,0,1,... by member id, or iid Bernoulli(0.5).
std::vector<int> alternating_covariates(std::size_t m);
std::vector<int> bernoulli_covariates(std::size_t m, Rng& rng);

/// Statistics of a fully augmented household that the complete-data
/// log-likelihood depends on:
///   l = k log b0 + b1 k1 + S + R log g0 - b0 (A0 + e^b1 A1) - g0 D
struct HouseholdStats {
  bool valid = true;       ///< false when some infection has I(t-) = 0
  int infections = 0;      ///< k: non-index infections
  int infections_z1 = 0;   ///< k1: those with z = 1
  int removals = 0;        ///< R
  double log_pressure = 0; ///< S: sum of log I(tau-)
  double exposure_z0 = 0;  ///< A0: sum over z = 0 susceptibles of integral of I up to infection/extinction
  double exposure_z1 = 0;  ///< A1: same for z = 1
  double duration = 0;     ///< D: total infectious time
};

HouseholdStats household_stats(const HouseholdRecord& record);
/// Stats with latent infection times supplied separately, in latent_positions() order.
HouseholdStats household_stats(const HouseholdRecord& observed, std::span<const double> latent);
double loglik_from_stats(const SirParams& p, const HouseholdStats& s);

double complete_loglik(const SirParams& params, const HouseholdRecord& household);
double complete_loglik(const SirParams& params, std::span<const HouseholdRecord> households);

/// Importance-sampling estimate of an observed-data log-likelihood.
struct IsEstimate {
  double value = 0.0;
  double se = 0.0;
  std::size_t n_samples = 0;
  bool tolerance_met = true;
  std::vector<std::string> warnings;
};

struct IsSettings {
  std::size_t initial_samples = 1000;
  std::size_t max_samples = 100'000;
  double tolerance = 0.1;  ///< target se in nats
};

/// Proposal draws for one household: each latent infection time is
/// Uniform(0, own removal time). Only the statistics of each draw are kept, so
/// the estimate can be re-evaluated at any parameter value in O(samples).
class ProposalBank {
 public:
  explicit ProposalBank(HouseholdRecord observed);

  void add_samples(std::size_t n, Rng& rng);
  IsEstimate estimate(const SirParams& params) const;
  std::size_t size() const { return n_total_; }
  bool exact() const { return n_latent_ == 0; }
  /// Doubles the bank until the se at `params` meets the tolerance or the cap.
  void grow_to_tolerance(const SirParams& params, const IsSettings& settings, Rng& rng);

 private:
  HouseholdRecord observed_;
  std::size_t n_latent_ = 0;
  double log_proposal_ = 0.0;
  std::size_t n_total_ = 0;
  std::vector<HouseholdStats> valid_;
};

/// Fixed-size estimate: log-mean-exp of (complete_loglik - log proposal).
IsEstimate observed_loglik_is(const SirParams& params, const HouseholdRecord& observed,
                              std::size_t n_samples, Rng& rng);
/// Adaptive estimate, doubling the sample size until se <= tolerance.
IsEstimate observed_loglik_is(const SirParams& params, const HouseholdRecord& observed,
                              const IsSettings& settings, Rng& rng);
/// Sum over conditionally independent households; se combined in quadrature.
IsEstimate observed_loglik_is(const SirParams& params, std::span<const HouseholdRecord> observed,
                              const IsSettings& settings, Rng& rng);

/// One Metropolis update per household of a uniformly chosen latent infection
/// time, proposed Uniform(0, own removal time).
mcmc::MoveStats augmentation_move(const SirParams& params, std::vector<HouseholdRecord>& households,
                                  Rng& rng);

// Household file: JSON array of {"members": [{"id", "z", "infection_time", "removal_time"}]}.
nlohmann::json to_json(const std::vector<HouseholdRecord>& households);
std::vector<HouseholdRecord> households_from_json(const nlohmann::json& j);

}  // namespace relinfo::sir
