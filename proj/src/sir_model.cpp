#include "relinfo/sir_model.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace relinfo::sir {
namespace {

constexpr double kNegInf = -std::numeric_limits<double>::infinity();

void accumulate(HouseholdStats& total, const HouseholdStats& s) {
  total.valid = total.valid && s.valid;
  total.infections += s.infections;
  total.infections_z1 += s.infections_z1;
  total.removals += s.removals;
  total.log_pressure += s.log_pressure;
  total.exposure_z0 += s.exposure_z0;
  total.exposure_z1 += s.exposure_z1;
  total.duration += s.duration;
}

}  // namespace

SirModel::SirModel(std::vector<HouseholdRecord> observed, SirModelSettings settings)
    : households_(std::move(observed)), settings_(settings) {
  settings_.priors.validate();
  offsets_.push_back(0);
  for (auto& h : households_) {
    h.validate(false);
    h = h.observed();
    offsets_.push_back(offsets_.back() + h.latent_positions().size());
  }
  banks_ = build_banks(settings_.bank_seed);
}

std::vector<ProposalBank> SirModel::build_banks(std::uint64_t seed) const {
  std::vector<ProposalBank> banks;
  std::size_t inexact = 0;
  for (const auto& h : households_) {
    banks.emplace_back(h);
    if (!banks.back().exact()) ++inexact;
  }
  IsSettings per_household = settings_.is;
  if (inexact > 0) per_household.tolerance /= std::sqrt(static_cast<double>(inexact));
  const Rng root(seed);
  for (std::size_t h = 0; h < banks.size(); ++h) {
    Rng rng = root.split(h);
    banks[h].grow_to_tolerance(settings_.initial, per_household, rng);
  }
  return banks;
}

HouseholdStats SirModel::total_stats(std::span<const double> latent) const {
  HouseholdStats total;
  for (std::size_t h = 0; h < households_.size(); ++h) {
    accumulate(total, household_stats(households_[h], household_latent(latent, h)));
    if (!total.valid) break;
  }
  return total;
}

std::vector<HouseholdRecord> SirModel::augmented(std::span<const double> latent) const {
  std::vector<HouseholdRecord> out = households_;
  for (std::size_t h = 0; h < out.size(); ++h) {
    const auto slice = household_latent(latent, h);
    const auto positions = out[h].latent_positions();
    for (std::size_t j = 0; j < positions.size(); ++j) out[h].members[positions[j]].infection_time = slice[j];
  }
  return out;
}

mcmc::ChainState SirModel::initial_state() const {
  mcmc::ChainState s;
  s.theta = {settings_.initial.beta0, settings_.initial.beta1, settings_.initial.gamma0};
  // Every latent infection happens while the index case is still infectious.
  for (const auto& h : households_) {
    const double r_index = *h.members[h.index_position()].removal_time;
    const auto positions = h.latent_positions();
    for (std::size_t j = 0; j < positions.size(); ++j) {
      const double cap = std::min(r_index, *h.members[positions[j]].removal_time);
      s.latent.push_back(cap * static_cast<double>(j + 1) / static_cast<double>(positions.size() + 2));
    }
  }
  return s;
}

mcmc::ChainState SirModel::initial_null_state() const {
  mcmc::ChainState s = initial_state();
  s.theta[1] = settings_.null_initial_beta1;
  return s;
}

double SirModel::log_prior(std::span<const double> theta) const {
  return settings_.priors.log_density(params(theta));
}

double SirModel::complete_loglik(std::span<const double> theta, std::span<const double> latent) const {
  return loglik_from_stats(params(theta), total_stats(latent));
}

mcmc::LogValue SirModel::bank_loglik(const std::vector<ProposalBank>& banks, const SirParams& p) const {
  mcmc::LogValue out;
  double var = 0.0;
  for (const auto& b : banks) {
    const IsEstimate e = b.estimate(p);
    out.value += e.value;
    var += e.se * e.se;
  }
  out.se = std::sqrt(var);
  return out;
}

mcmc::LogValue SirModel::observed_loglik(std::span<const double> theta) const {
  return bank_loglik(banks_, params(theta));
}

mcmc::LogValue SirModel::missing_conditional_logdensity(std::span<const double> theta,
                                                        std::span<const double> latent) const {
  std::call_once(check_banks_once_, [this] { check_banks_ = build_banks(~settings_.bank_seed); });
  const mcmc::LogValue obs = bank_loglik(check_banks_, params(theta));
  return {complete_loglik(theta, latent) - obs.value, obs.se};
}

mcmc::MoveStats SirModel::update_latent(std::span<const double> theta, std::vector<double>& latent,
                                        Rng& rng) const {
  const SirParams p = params(theta);
  mcmc::MoveStats stats;
  for (std::size_t h = 0; h < households_.size(); ++h) {
    const std::size_t begin = offsets_[h];
    const std::size_t count = offsets_[h + 1] - begin;
    if (count == 0) continue;
    const auto& hh = households_[h];
    std::span<double> slice(latent.data() + begin, count);
    const std::size_t j = rng.index(count);
    const double current = loglik_from_stats(p, household_stats(hh, slice));
    const double old_tau = slice[j];
    slice[j] = *hh.members[hh.latent_positions()[j]].removal_time * rng.uniform();
    const double proposed = loglik_from_stats(p, household_stats(hh, slice));
    ++stats.proposed;
    if (proposed != kNegInf && std::log(rng.uniform_open_zero()) < proposed - current) {
      ++stats.accepted;
    } else {
      slice[j] = old_tau;
    }
  }
  return stats;
}

std::vector<mcmc::ParameterBlock> SirModel::parameter_blocks(bool null_constrained) const {
  std::vector<mcmc::ParameterBlock> blocks{
      {"beta0", {0}, 0.3, mcmc::Transform::log, std::nullopt},
      {"beta1", {1}, 0.5, mcmc::Transform::identity, std::nullopt},
      {"gamma0", {2}, 0.3, mcmc::Transform::log, std::nullopt},
  };
  if (null_constrained) blocks[1].reflect_upper = 0.0;
  return blocks;
}

}  // namespace relinfo::sir
