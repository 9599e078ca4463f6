#include "relinfo/bernstein.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <stdexcept>

namespace relinfo::bernstein {
namespace {

constexpr double kNegInf = -std::numeric_limits<double>::infinity();
constexpr int kDerivativeGrid = 1001;
constexpr double kDerivativeSlack = 1e-12;

double reflect_into(double x, double lo, double hi) {
  while (x < lo || x > hi) {
    if (x < lo) x = 2.0 * lo - x;
    if (x > hi) x = 2.0 * hi - x;
  }
  return x;
}

}  // namespace

double bernstein_basis(int i, int n, double t) {
  if (n < 0 || i < 0 || i > n) {
    throw std::out_of_range("Bernstein basis index " + std::to_string(i) + " out of range for order " +
                            std::to_string(n));
  }
  if (!(t >= 0.0 && t <= 1.0)) throw std::out_of_range("Bernstein basis evaluated outside [0, 1]");
  if (n == 0) return 1.0;
  if (t == 0.0) return i == 0 ? 1.0 : 0.0;
  if (t == 1.0) return i == n ? 1.0 : 0.0;
  const double log_binom = std::lgamma(n + 1.0) - std::lgamma(i + 1.0) - std::lgamma(n - i + 1.0);
  return std::exp(log_binom + i * std::log(t) + (n - i) * std::log1p(-t));
}

double eval_poly(std::span<const double> b, double t) {
  if (b.empty()) throw std::invalid_argument("Bernstein polynomial needs at least one coefficient");
  std::vector<double> c(b.begin(), b.end());
  for (std::size_t r = 1; r < c.size(); ++r) {
    for (std::size_t i = 0; i + r < c.size(); ++i) c[i] = (1.0 - t) * c[i] + t * c[i + 1];
  }
  return c[0];
}

std::vector<double> degree_elevate(std::span<const double> b) {
  const std::size_t n = b.size() - 1;
  const auto denom = static_cast<double>(n + 1);
  std::vector<double> out(n + 2);
  for (std::size_t i = 0; i <= n + 1; ++i) {
    const double a = static_cast<double>(i) / denom;
    const double left = i >= 1 ? a * b[i - 1] : 0.0;
    const double right = i <= n ? (1.0 - a) * b[i] : 0.0;
    out[i] = left + right;
  }
  return out;
}

MonotoneMode monotone_mode_from_string(const std::string& s) {
  if (s == "sorted") return MonotoneMode::sorted_coefficients;
  if (s == "derivative") return MonotoneMode::derivative_grid;
  throw std::invalid_argument("unknown monotone mode '" + s + "' (expected sorted|derivative)");
}

std::string to_string(MonotoneMode m) {
  return m == MonotoneMode::sorted_coefficients ? "sorted" : "derivative";
}

bool is_monotone_event(std::span<const double> b, MonotoneMode mode) {
  if (mode == MonotoneMode::sorted_coefficients) return std::is_sorted(b.begin(), b.end());
  if (b.size() < 2) return true;
  std::vector<double> diff(b.size() - 1);
  for (std::size_t i = 0; i + 1 < b.size(); ++i) diff[i] = b[i + 1] - b[i];
  const auto n = static_cast<double>(b.size() - 1);
  for (int g = 0; g < kDerivativeGrid; ++g) {
    const double t = static_cast<double>(g) / (kDerivativeGrid - 1);
    if (n * eval_poly(diff, t) < -kDerivativeSlack) return false;
  }
  return true;
}

BernsteinPrior BernsteinPrior::truncated_poisson(double mean, int n_max, double tau1, double tau2) {
  if (!(mean > 0.0) || n_max < 1) throw std::invalid_argument("invalid truncated Poisson order prior");
  BernsteinPrior p;
  p.tau1 = tau1;
  p.tau2 = tau2;
  double total = 0.0;
  for (int n = 1; n <= n_max; ++n) {
    p.order_pmf.push_back(std::exp(n * std::log(mean) - std::lgamma(n + 1.0)));
    total += p.order_pmf.back();
  }
  for (auto& v : p.order_pmf) v /= total;
  p.validate();
  return p;
}

BernsteinPrior BernsteinPrior::fixed_order(int n, double tau1, double tau2) {
  if (n < 1) throw std::invalid_argument("order must be >= 1");
  BernsteinPrior p;
  p.tau1 = tau1;
  p.tau2 = tau2;
  p.order_pmf.assign(static_cast<std::size_t>(n), 0.0);
  p.order_pmf.back() = 1.0;
  p.validate();
  return p;
}

void BernsteinPrior::validate() const {
  if (order_pmf.empty()) throw std::invalid_argument("order pmf is empty");
  double total = 0.0;
  for (double v : order_pmf) {
    if (!(v >= 0.0)) throw std::invalid_argument("order pmf entries must be >= 0");
    total += v;
  }
  if (std::abs(total - 1.0) > 1e-9) throw std::invalid_argument("order pmf must sum to 1");
  if (!(tau1 < tau2)) throw std::invalid_argument("coefficient box needs tau1 < tau2");
  if (sigma_rate && !(*sigma_rate > 0.0)) throw std::invalid_argument("sigma prior rate must be positive");
}

double BernsteinPrior::log_density(const BernsteinState& s) const {
  const int n = s.order();
  const double pn = pmf(n);
  if (!(pn > 0.0)) return kNegInf;
  for (double v : s.b) {
    if (!(v >= tau1 && v <= tau2)) return kNegInf;
  }
  double lp = std::log(pn) - (n + 1) * std::log(tau2 - tau1);
  if (sigma_rate) {
    if (!(s.sigma > 0.0)) return kNegInf;
    lp += std::log(*sigma_rate) - *sigma_rate * s.sigma;
  }
  return lp;
}

double prior_prob_monotone(const BernsteinPrior& prior) {
  double total = 0.0;
  for (int n = 1; n <= prior.n_max(); ++n) {
    if (prior.pmf(n) > 0.0) total += std::exp(std::log(prior.pmf(n)) - std::lgamma(n + 2.0));
  }
  return total;
}

void RegressionData::validate() const {
  if (points.empty()) throw std::invalid_argument("regression data has no points");
  for (std::size_t k = 0; k < points.size(); ++k) {
    const auto& p = points[k];
    if (!(p.x >= 0.0 && p.x <= 1.0)) {
      throw std::invalid_argument("design point " + std::to_string(k) + " lies outside [0, 1]");
    }
    if (!std::isfinite(p.y)) throw std::invalid_argument("response " + std::to_string(k) + " is not finite");
  }
  if (sigma_known && !(*sigma_known > 0.0)) throw std::invalid_argument("sigma must be positive");
}

double reg_loglik(const BernsteinState& state, const RegressionData& data) {
  if (!(state.sigma > 0.0)) throw std::invalid_argument("sigma must be positive");
  const double norm = std::log(state.sigma) + 0.5 * std::log(2.0 * std::numbers::pi);
  const double inv2s2 = 1.0 / (2.0 * state.sigma * state.sigma);
  double ll = 0.0;
  for (const auto& p : data.points) {
    const double r = p.y - eval_poly(state.b, p.x);
    ll -= r * r * inv2s2 + norm;
  }
  return ll;
}

mcmc::MoveStats rj_move(BernsteinState& state, const BernsteinPrior& prior, const RegressionData& data,
                        Rng& rng, const RjSettings& settings) {
  mcmc::MoveStats stats{0, 1};
  const double current = reg_loglik(state, data);
  BernsteinState proposal = state;
  double log_alpha = 0.0;

  if (rng.uniform() < 0.5) {
    const std::size_t i = rng.index(state.b.size());
    proposal.b[i] = reflect_into(state.b[i] + settings.coefficient_step * rng.normal(), prior.tau1, prior.tau2);
    if (settings.null_constrained && !std::is_sorted(proposal.b.begin(), proposal.b.end())) return stats;
    log_alpha = reg_loglik(proposal, data) - current;
  } else {
    const int n = state.order();
    const int n_new = std::clamp(n + (rng.uniform() < 0.5 ? -1 : 1), 1, prior.n_max());
    if (!(prior.pmf(n_new) > 0.0)) return stats;
    proposal.b.resize(static_cast<std::size_t>(n_new) + 1);
    for (auto& v : proposal.b) v = rng.uniform(prior.tau1, prior.tau2);
    // The fresh coefficients are drawn from the (restricted) prior, so their
    // density cancels against the prior; only p(n) and, under the sorted
    // restriction, the (n + 1)! normalisers remain.
    log_alpha = std::log(prior.pmf(n_new)) - std::log(prior.pmf(n)) + reg_loglik(proposal, data) - current;
    if (settings.null_constrained) {
      std::sort(proposal.b.begin(), proposal.b.end());
      log_alpha += std::lgamma(n + 2.0) - std::lgamma(n_new + 2.0);
    }
  }
  if (std::isfinite(log_alpha) && std::log(rng.uniform_open_zero()) < log_alpha) {
    state = std::move(proposal);
    stats.accepted = 1;
  }
  return stats;
}

BernsteinModel::BernsteinModel(RegressionData data, BernsteinPrior prior, double sigma, MonotoneMode mode,
                               RjSettings rj, std::size_t moves_per_sweep)
    : data_(std::move(data)),
      prior_(std::move(prior)),
      sigma_(sigma),
      mode_(mode),
      rj_(rj),
      moves_per_sweep_(moves_per_sweep) {
  prior_.validate();
  if (!(sigma_ > 0.0)) throw std::invalid_argument("sigma must be positive");
  if (moves_per_sweep_ == 0) throw std::invalid_argument("moves_per_sweep must be >= 1");
}

BernsteinState BernsteinModel::state(std::span<const double> theta) {
  return {std::vector<double>(theta.begin() + 1, theta.end()), theta[0]};
}

std::vector<double> BernsteinModel::theta(const BernsteinState& s) {
  std::vector<double> t{s.sigma};
  t.insert(t.end(), s.b.begin(), s.b.end());
  return t;
}

mcmc::ChainState BernsteinModel::initial_state() const {
  int n = 1;
  for (int k = 1; k <= prior_.n_max(); ++k) {
    if (prior_.pmf(k) > prior_.pmf(n)) n = k;
  }
  double level = 0.5 * (prior_.tau1 + prior_.tau2);
  if (!data_.points.empty()) {
    level = 0.0;
    for (const auto& p : data_.points) level += p.y;
    level = std::clamp(level / static_cast<double>(data_.points.size()), prior_.tau1, prior_.tau2);
  }
  // Constant coefficients are sorted, so this also serves constrained chains.
  BernsteinState s{std::vector<double>(static_cast<std::size_t>(n) + 1, level), sigma_};
  return {theta(s), {}};
}

mcmc::ChainState BernsteinModel::initial_null_state() const { return initial_state(); }

double BernsteinModel::log_prior(std::span<const double> theta) const {
  return prior_.log_density(state(theta));
}

double BernsteinModel::complete_loglik(std::span<const double> theta, std::span<const double>) const {
  return reg_loglik(state(theta), data_);
}

mcmc::LogValue BernsteinModel::observed_loglik(std::span<const double> theta) const {
  return {reg_loglik(state(theta), data_), 0.0};
}

bool BernsteinModel::null_predicate(std::span<const double> theta) const {
  return is_monotone_event(theta.subspan(1), mode_);
}

std::vector<mcmc::ParameterBlock> BernsteinModel::parameter_blocks(bool) const {
  if (!prior_.sigma_rate) return {};
  return {{"sigma", {0}, 0.2, mcmc::Transform::log, std::nullopt}};
}

mcmc::MoveStats BernsteinModel::extra_move(mcmc::ChainState& chain_state, Rng& rng,
                                           bool null_constrained) const {
  mcmc::MoveStats total;
  BernsteinState s = state(chain_state.theta);
  RjSettings settings = rj_;
  const bool sorted_mode = mode_ == MonotoneMode::sorted_coefficients;
  settings.null_constrained = null_constrained && sorted_mode;
  for (std::size_t k = 0; k < moves_per_sweep_; ++k) {
    if (null_constrained && !sorted_mode) {
      // Restricting the target to the event: accepted moves that leave it are undone.
      BernsteinState trial = s;
      mcmc::MoveStats ms = rj_move(trial, prior_, data_, rng, settings);
      if (ms.accepted && is_monotone_event(trial.b, mode_)) {
        s = std::move(trial);
      } else {
        ms.accepted = 0;
      }
      total += ms;
    } else {
      total += rj_move(s, prior_, data_, rng, settings);
    }
  }
  chain_state.theta = theta(s);
  return total;
}

std::vector<double> BernsteinModel::summaries(std::span<const double> theta) const {
  const auto b = theta.subspan(1);
  return {static_cast<double>(b.size() - 1), eval_poly(b, 0.5), theta[0]};
}

MonotoneOdds monotone_odds(std::span<const mcmc::ParameterDraw> draws, const BernsteinPrior& prior,
                           MonotoneMode mode) {
  if (draws.empty()) throw InsufficientSamplesError("no draws");
  std::size_t hits = 0;
  for (const auto& d : draws) {
    if (is_monotone_event(std::span<const double>(d.theta).subspan(1), mode)) ++hits;
  }
  MonotoneOdds odds;
  const auto n = static_cast<double>(draws.size());
  odds.posterior_prob = static_cast<double>(hits) / n;
  odds.prior_prob = prior_prob_monotone(prior);
  odds.ratio = odds.posterior_prob / odds.prior_prob;
  odds.zero_count = hits == 0;
  odds.posterior_upper = odds.zero_count ? 3.0 / n : odds.posterior_prob;
  return odds;
}

std::vector<double> replicate_design(int k) {
  if (k < 1) throw std::invalid_argument("design size must be >= 1");
  std::vector<double> x;
  for (int j = 0; j <= k; ++j) x.push_back(static_cast<double>(j) / k);
  return x;
}

std::vector<double> partition_design(int per_half) {
  if (per_half < 1) throw std::invalid_argument("partition needs at least one point per half");
  std::vector<double> x;
  const double denom = 2.0 * (per_half + 1);
  for (int i = 1; i <= per_half; ++i) x.push_back(i / denom);
  for (int i = 1; i <= per_half; ++i) x.push_back(0.5 + i / denom);
  return x;
}

std::vector<double> duplicate_design(std::span<const double> design) {
  std::vector<double> x;
  for (double v : design) {
    x.push_back(v);
    x.push_back(v);
  }
  return x;
}

DesignOutcome ri_design(std::span<const mcmc::ParameterDraw> draws,
                        std::span<const mcmc::ParameterDraw> null_draws, std::span<const double> new_points,
                        double sigma, const Rng& rng, const ri::RIOptions& options) {
  if (draws.empty()) throw InsufficientSamplesError("no posterior draws");
  if (null_draws.empty()) throw InsufficientSamplesError("no null draws");
  if (!(sigma > 0.0)) throw std::invalid_argument("sigma must be positive");
  for (double x : new_points) {
    if (!(x >= 0.0 && x <= 1.0)) throw std::invalid_argument("design point outside [0, 1]");
  }
  const std::size_t L = new_points.size();
  auto fitted = [&](const mcmc::ParameterDraw& d) {
    const auto b = std::span<const double>(d.theta).subspan(1);
    std::vector<double> f(L);
    for (std::size_t l = 0; l < L; ++l) f[l] = eval_poly(b, new_points[l]);
    return f;
  };

  DesignOutcome out;
  for (const auto& d : draws) out.samples.ell.values.push_back(d.obs_loglik);
  std::vector<std::vector<double>> null_fits;
  for (std::size_t j = 0; j < null_draws.size(); ++j) {
    null_fits.push_back(fitted(null_draws[j]));
    out.samples.ratios.push_back({j, std::vector<double>(draws.size(), 0.0)});
  }
  const double inv2s2 = 1.0 / (2.0 * sigma * sigma);
  std::vector<double> y(L);
  for (std::size_t m = 0; m < draws.size(); ++m) {
    const auto fm = fitted(draws[m]);
    Rng draw_rng = rng.split(m);
    for (std::size_t l = 0; l < L; ++l) y[l] = fm[l] + sigma * draw_rng.normal();
    for (std::size_t j = 0; j < null_fits.size(); ++j) {
      double w = 0.0;
      for (std::size_t l = 0; l < L; ++l) {
        const double r0 = y[l] - null_fits[j][l];
        const double rm = y[l] - fm[l];
        w += (r0 * r0 - rm * rm) * inv2s2;
      }
      out.samples.ratios[j].values[m] = w;
    }
  }
  out.result = ri::ri_compute(out.samples.ell, out.samples.ratios, options);
  return out;
}

}  // namespace relinfo::bernstein
