#include "relinfo/sir.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <set>
#include <sstream>

#include "relinfo/numeric.hpp"

namespace relinfo::sir {
namespace {

constexpr double kNegInf = -std::numeric_limits<double>::infinity();

struct Case {
  double tau;
  double removal;
  int z;
  bool index;
};

// Core of the complete-data likelihood: walks the merged event sequence,
// tracking I(t) and its running integral.
HouseholdStats stats_from_cases(std::vector<Case>& cases, int never_z0, int never_z1) {
  HouseholdStats s;
  for (const auto& c : cases) {
    if (!(c.tau < c.removal) || (!c.index && !(c.tau > 0.0))) {
      s.valid = false;
      return s;
    }
  }
  std::sort(cases.begin(), cases.end(), [](const Case& a, const Case& b) { return a.tau < b.tau; });
  std::vector<double> removals;
  removals.reserve(cases.size());
  for (const auto& c : cases) removals.push_back(c.removal);
  std::sort(removals.begin(), removals.end());

  int infectious = 0;
  double integral = 0.0;
  double t_prev = 0.0;
  std::size_t ni = 0;
  std::size_t nr = 0;
  while (ni < cases.size() || nr < removals.size()) {
    // At a tie the infection is processed first: a member removed at t is
    // still infectious at t-.
    const bool infection = ni < cases.size() && (nr >= removals.size() || cases[ni].tau <= removals[nr]);
    const double t = infection ? cases[ni].tau : removals[nr];
    integral += infectious * (t - t_prev);
    t_prev = t;
    if (infection) {
      const Case& c = cases[ni++];
      if (!c.index) {
        if (infectious == 0) {
          s.valid = false;
          return s;
        }
        s.log_pressure += std::log(static_cast<double>(infectious));
        ++s.infections;
        if (c.z == 1) {
          ++s.infections_z1;
          s.exposure_z1 += integral;
        } else {
          s.exposure_z0 += integral;
        }
      }
      ++infectious;
    } else {
      --infectious;
      ++s.removals;
      ++nr;
    }
  }
  s.exposure_z0 += never_z0 * integral;
  s.exposure_z1 += never_z1 * integral;
  for (const auto& c : cases) s.duration += c.removal - c.tau;
  return s;
}

std::string member_context(const Member& m) { return "member " + std::to_string(m.id); }

}  // namespace

void SirParams::validate() const {
  if (!(beta0 >= 0.0) || !std::isfinite(beta0)) throw std::invalid_argument("beta0 must be >= 0");
  if (!std::isfinite(beta1)) throw std::invalid_argument("beta1 must be finite");
  if (!(gamma0 > 0.0) || !std::isfinite(gamma0)) throw std::invalid_argument("gamma0 must be > 0");
}

void SirPriors::validate() const {
  if (!(beta0_rate > 0.0) || !(gamma0_rate > 0.0)) {
    throw std::invalid_argument("exponential prior rates must be positive");
  }
  if (!(beta1_sd > 0.0)) throw std::invalid_argument("beta1 prior sd must be positive");
}

double SirPriors::log_density(const SirParams& p) const {
  if (!(p.beta0 > 0.0) || !(p.gamma0 > 0.0) || !std::isfinite(p.beta1)) return kNegInf;
  const double zb = (p.beta1 - beta1_mean) / beta1_sd;
  return std::log(beta0_rate) - beta0_rate * p.beta0 + std::log(gamma0_rate) -
         gamma0_rate * p.gamma0 - 0.5 * zb * zb - std::log(beta1_sd) -
         0.5 * std::log(2.0 * std::numbers::pi);
}

double SirPriors::null_probability() const {
  return 0.5 * std::erfc(beta1_mean / (beta1_sd * std::numbers::sqrt2));
}

std::size_t HouseholdRecord::index_position() const {
  for (std::size_t i = 0; i < members.size(); ++i) {
    if (members[i].id == index_member) return i;
  }
  throw std::invalid_argument("index member " + std::to_string(index_member) + " not in household");
}

std::vector<std::size_t> HouseholdRecord::latent_positions() const {
  const std::size_t idx = index_position();
  std::vector<std::size_t> out;
  for (std::size_t i = 0; i < members.size(); ++i) {
    if (i != idx && members[i].removal_time) out.push_back(i);
  }
  return out;
}

void HouseholdRecord::validate(bool fully_augmented) const {
  if (members.empty()) throw std::invalid_argument("household has no members");
  std::set<int> ids;
  int n_index = 0;
  for (const auto& m : members) {
    if (!ids.insert(m.id).second) throw std::invalid_argument("duplicate member id " + std::to_string(m.id));
    if (m.z != 0 && m.z != 1) throw std::invalid_argument(member_context(m) + ": z must be 0 or 1");
    if (m.infection_time && *m.infection_time == 0.0) ++n_index;
    if (m.infection_time && !m.removal_time) {
      throw std::invalid_argument(member_context(m) +
                                  ": infected but never removed (epidemic not observed to extinction)");
    }
    if (m.removal_time && !(*m.removal_time > 0.0 && std::isfinite(*m.removal_time))) {
      throw std::invalid_argument(member_context(m) + ": removal time must be positive");
    }
    if (m.infection_time && m.removal_time && !(*m.infection_time < *m.removal_time)) {
      throw std::invalid_argument(member_context(m) + ": infection time must precede removal");
    }
    if (m.infection_time && *m.infection_time < 0.0) {
      throw std::invalid_argument(member_context(m) + ": negative infection time");
    }
    if (fully_augmented && m.removal_time && !m.infection_time) {
      throw std::invalid_argument(member_context(m) + ": removed member lacks an infection time");
    }
  }
  if (n_index != 1) {
    throw std::invalid_argument("household must have exactly one index case infected at time 0, found " +
                                std::to_string(n_index));
  }
  const auto& idx = members[index_position()];
  if (!idx.infection_time || *idx.infection_time != 0.0) {
    throw std::invalid_argument("index_member does not match the member infected at time 0");
  }
  if (fully_augmented && !household_stats(*this).valid) {
    throw std::invalid_argument("some infection occurs while nobody in the household is infectious");
  }
}

HouseholdRecord HouseholdRecord::observed() const {
  HouseholdRecord out = *this;
  for (auto& m : out.members) {
    if (m.id != index_member) m.infection_time.reset();
  }
  return out;
}

HouseholdRecord simulate_household(const SirParams& params, std::span<const int> z, Rng& rng) {
  params.validate();
  const std::size_t m = z.size();
  if (m == 0) throw std::invalid_argument("household must have at least one member");
  HouseholdRecord rec;
  rec.index_member = 1;
  for (std::size_t i = 0; i < m; ++i) rec.members.push_back({static_cast<int>(i + 1), z[i], {}, {}});

  enum class St { s, i, r };
  std::vector<St> state(m, St::s);
  std::vector<double> susceptibility(m);
  for (std::size_t i = 0; i < m; ++i) susceptibility[i] = params.beta0 * std::exp(params.beta1 * z[i]);
  state[0] = St::i;
  rec.members[0].infection_time = 0.0;
  int infectious = 1;
  double t = 0.0;
  while (infectious > 0) {
    double infection_total = 0.0;
    for (std::size_t i = 0; i < m; ++i) {
      if (state[i] == St::s) infection_total += susceptibility[i] * infectious;
    }
    const double removal_total = params.gamma0 * infectious;
    const double total = infection_total + removal_total;
    t += rng.exponential(total);
    double u = rng.uniform() * total;
    std::size_t chosen = m;
    bool is_infection = false;
    for (std::size_t i = 0; i < m && chosen == m; ++i) {
      if (state[i] == St::s) {
        u -= susceptibility[i] * infectious;
        if (u < 0.0) {
          chosen = i;
          is_infection = true;
        }
      }
    }
    for (std::size_t i = 0; i < m && chosen == m; ++i) {
      if (state[i] == St::i) {
        u -= params.gamma0;
        if (u < 0.0) chosen = i;
      }
    }
    if (chosen == m) {
      // Rounding left u marginally positive; take the last infectious member.
      for (std::size_t i = m; i-- > 0;) {
        if (state[i] == St::i) {
          chosen = i;
          break;
        }
      }
    }
    if (is_infection) {
      state[chosen] = St::i;
      rec.members[chosen].infection_time = t;
      ++infectious;
    } else {
      state[chosen] = St::r;
      rec.members[chosen].removal_time = t;
      --infectious;
    }
  }
  return rec;
}

std::vector<int> alternating_covariates(std::size_t m) {
  std::vector<int> z(m);
  for (std::size_t i = 0; i < m; ++i) z[i] = static_cast<int>(i % 2);
  return z;
}

std::vector<int> bernoulli_covariates(std::size_t m, Rng& rng) {
  std::vector<int> z(m);
  for (auto& v : z) v = rng.uniform() < 0.5 ? 1 : 0;
  return z;
}

HouseholdStats household_stats(const HouseholdRecord& record) {
  std::vector<Case> cases;
  int never_z0 = 0;
  int never_z1 = 0;
  for (const auto& m : record.members) {
    if (m.infection_time) {
      if (!m.removal_time) return HouseholdStats{.valid = false};
      cases.push_back({*m.infection_time, *m.removal_time, m.z, m.id == record.index_member});
    } else if (m.removal_time) {
      return HouseholdStats{.valid = false};
    } else {
      (m.z == 1 ? never_z1 : never_z0)++;
    }
  }
  return stats_from_cases(cases, never_z0, never_z1);
}

HouseholdStats household_stats(const HouseholdRecord& observed, std::span<const double> latent) {
  std::vector<Case> cases;
  int never_z0 = 0;
  int never_z1 = 0;
  std::size_t k = 0;
  for (const auto& m : observed.members) {
    if (m.id == observed.index_member) {
      cases.push_back({0.0, m.removal_time.value_or(0.0), m.z, true});
    } else if (m.removal_time) {
      if (k >= latent.size()) throw std::invalid_argument("too few latent infection times");
      cases.push_back({latent[k++], *m.removal_time, m.z, false});
    } else {
      (m.z == 1 ? never_z1 : never_z0)++;
    }
  }
  if (k != latent.size()) throw std::invalid_argument("too many latent infection times");
  return stats_from_cases(cases, never_z0, never_z1);
}

double loglik_from_stats(const SirParams& p, const HouseholdStats& s) {
  if (!s.valid) return kNegInf;
  double ll = s.log_pressure - p.beta0 * (s.exposure_z0 + std::exp(p.beta1) * s.exposure_z1) -
              p.gamma0 * s.duration;
  if (s.infections > 0) ll += s.infections * std::log(p.beta0) + p.beta1 * s.infections_z1;
  if (s.removals > 0) ll += s.removals * std::log(p.gamma0);
  return ll;
}

double complete_loglik(const SirParams& params, const HouseholdRecord& household) {
  return loglik_from_stats(params, household_stats(household));
}

double complete_loglik(const SirParams& params, std::span<const HouseholdRecord> households) {
  double ll = 0.0;
  for (const auto& h : households) {
    ll += complete_loglik(params, h);
    if (ll == kNegInf) break;
  }
  return ll;
}

ProposalBank::ProposalBank(HouseholdRecord observed) : observed_(std::move(observed)) {
  observed_.validate(false);
  for (std::size_t pos : observed_.latent_positions()) {
    ++n_latent_;
    log_proposal_ -= std::log(*observed_.members[pos].removal_time);
  }
  if (n_latent_ == 0) {
    n_total_ = 1;
    valid_.push_back(household_stats(observed_, {}));
  }
}

void ProposalBank::add_samples(std::size_t n, Rng& rng) {
  if (exact()) return;
  const auto positions = observed_.latent_positions();
  std::vector<double> latent(n_latent_);
  for (std::size_t s = 0; s < n; ++s) {
    for (std::size_t j = 0; j < n_latent_; ++j) {
      latent[j] = *observed_.members[positions[j]].removal_time * rng.uniform();
    }
    HouseholdStats st = household_stats(observed_, latent);
    if (st.valid) valid_.push_back(st);
  }
  n_total_ += n;
}

IsEstimate ProposalBank::estimate(const SirParams& params) const {
  IsEstimate out;
  out.n_samples = exact() ? 0 : n_total_;
  if (n_total_ == 0) throw InsufficientSamplesError("proposal bank is empty");
  if (valid_.empty()) {
    throw ZeroLikelihoodError("all " + std::to_string(n_total_) +
                              " importance samples fall outside the likelihood support");
  }
  if (exact()) {
    out.value = loglik_from_stats(params, valid_.front());
    return out;
  }
  // k, k1 and R are fixed by the observed data, so only the sample-varying
  // part of the log-likelihood is evaluated per draw.
  const HouseholdStats& first = valid_.front();
  double constant = -log_proposal_;
  if (first.infections > 0) {
    constant += first.infections * std::log(params.beta0) + params.beta1 * first.infections_z1;
  }
  if (first.removals > 0) constant += first.removals * std::log(params.gamma0);
  const double rel_z1 = std::exp(params.beta1);
  auto varying = [&](const HouseholdStats& s) {
    return s.log_pressure - params.beta0 * (s.exposure_z0 + rel_z1 * s.exposure_z1) -
           params.gamma0 * s.duration;
  };
  double hi = kNegInf;
  for (const auto& s : valid_) hi = std::max(hi, varying(s));
  if (!std::isfinite(hi + constant)) throw ZeroLikelihoodError("all importance weights are zero");
  // Invalid draws are zero weights: they count in n but not in the sums.
  double s1 = 0.0;
  double s2 = 0.0;
  for (const auto& s : valid_) {
    const double w = std::exp(varying(s) - hi);
    s1 += w;
    s2 += w * w;
  }
  hi += constant;
  const auto n = static_cast<double>(n_total_);
  const double mean_w = s1 / n;
  out.value = hi + std::log(mean_w);
  if (n_total_ > 1) {
    const double var_w = std::max(0.0, (s2 - n * mean_w * mean_w) / (n - 1.0));
    out.se = std::sqrt(var_w / n) / mean_w;
  }
  return out;
}

void ProposalBank::grow_to_tolerance(const SirParams& params, const IsSettings& settings, Rng& rng) {
  if (exact()) return;
  if (n_total_ < settings.initial_samples) add_samples(settings.initial_samples - n_total_, rng);
  while (n_total_ < settings.max_samples) {
    if (!valid_.empty() && estimate(params).se <= settings.tolerance) return;
    add_samples(std::min(n_total_, settings.max_samples - n_total_), rng);
  }
}

IsEstimate observed_loglik_is(const SirParams& params, const HouseholdRecord& observed,
                              std::size_t n_samples, Rng& rng) {
  ProposalBank bank(observed);
  bank.add_samples(n_samples, rng);
  return bank.estimate(params);
}

IsEstimate observed_loglik_is(const SirParams& params, const HouseholdRecord& observed,
                              const IsSettings& settings, Rng& rng) {
  ProposalBank bank(observed);
  bank.grow_to_tolerance(params, settings, rng);
  IsEstimate est = bank.estimate(params);
  if (est.se > settings.tolerance) {
    est.tolerance_met = false;
    std::ostringstream msg;
    msg << "importance-sampling se " << est.se << " exceeds tolerance " << settings.tolerance
        << " after " << est.n_samples << " samples";
    est.warnings.push_back(msg.str());
  }
  return est;
}

IsEstimate observed_loglik_is(const SirParams& params, std::span<const HouseholdRecord> observed,
                              const IsSettings& settings, Rng& rng) {
  IsEstimate total;
  double var = 0.0;
  for (std::size_t h = 0; h < observed.size(); ++h) {
    Rng hrng = rng.split(h);
    IsEstimate e = observed_loglik_is(params, observed[h], settings, hrng);
    total.value += e.value;
    var += e.se * e.se;
    total.n_samples += e.n_samples;
    total.tolerance_met = total.tolerance_met && e.tolerance_met;
    for (auto& w : e.warnings) total.warnings.push_back("household " + std::to_string(h) + ": " + w);
  }
  total.se = std::sqrt(var);
  return total;
}

mcmc::MoveStats augmentation_move(const SirParams& params, std::vector<HouseholdRecord>& households,
                                  Rng& rng) {
  mcmc::MoveStats stats;
  for (auto& h : households) {
    const auto positions = h.latent_positions();
    if (positions.empty()) continue;
    Member& m = h.members[positions[rng.index(positions.size())]];
    const double current_ll = complete_loglik(params, h);
    const double old_tau = *m.infection_time;
    m.infection_time = *m.removal_time * rng.uniform();
    const double proposed_ll = complete_loglik(params, h);
    ++stats.proposed;
    if (proposed_ll != kNegInf && std::log(rng.uniform_open_zero()) < proposed_ll - current_ll) {
      ++stats.accepted;
    } else {
      m.infection_time = old_tau;
    }
  }
  return stats;
}

nlohmann::json to_json(const std::vector<HouseholdRecord>& households) {
  auto opt = [](const std::optional<double>& v) {
    return v ? nlohmann::json(*v) : nlohmann::json(nullptr);
  };
  nlohmann::json arr = nlohmann::json::array();
  for (const auto& h : households) {
    nlohmann::json members = nlohmann::json::array();
    for (const auto& m : h.members) {
      members.push_back({{"id", m.id},
                         {"z", m.z},
                         {"infection_time", opt(m.infection_time)},
                         {"removal_time", opt(m.removal_time)}});
    }
    arr.push_back({{"members", members}});
  }
  return arr;
}

std::vector<HouseholdRecord> households_from_json(const nlohmann::json& j) {
  if (!j.is_array()) throw std::invalid_argument("household file must hold a JSON array");
  std::vector<HouseholdRecord> out;
  for (std::size_t h = 0; h < j.size(); ++h) {
    try {
      HouseholdRecord rec;
      bool found_index = false;
      for (const auto& mj : j[h].at("members")) {
        Member m;
        m.id = mj.at("id").get<int>();
        m.z = mj.at("z").get<int>();
        if (!mj.at("infection_time").is_null()) m.infection_time = mj.at("infection_time").get<double>();
        if (!mj.at("removal_time").is_null()) m.removal_time = mj.at("removal_time").get<double>();
        if (m.infection_time && *m.infection_time == 0.0 && !found_index) {
          rec.index_member = m.id;
          found_index = true;
        }
        rec.members.push_back(m);
      }
      rec.validate(false);
      out.push_back(std::move(rec));
    } catch (const std::exception& e) {
      throw std::invalid_argument("household " + std::to_string(h) + ": " + e.what());
    }
  }
  return out;
}

}  // namespace relinfo::sir
