#pragma once

// Bayesian monotonicity test for a regression function on [0, 1].
//
// F is a Bernstein polynomial F(t) = sum_i b_i C(n,i) t^i (1-t)^(n-i). The
// prior picks the order n from a pmf p(n) and the coefficients iid
// Uniform(tau1, tau2); nondecreasing coefficients make F nondecreasing, which
// defines the null event.

#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "relinfo/mcmc.hpp"
#include "relinfo/ri_measures.hpp"
#include "relinfo/rng.hpp"

namespace relinfo::bernstein {

/// phi_{i,n}(t), evaluated through log binomial coefficients.
double bernstein_basis(int i, int n, double t);

/// F(t) by de Casteljau's algorithm; b has n + 1 entries.
double eval_poly(std::span<const double> b, double t);

/// Coefficients of the same polynomial written at order n + 1.
std::vector<double> degree_elevate(std::span<const double> b);

enum class MonotoneMode { sorted_coefficients, derivative_grid };

MonotoneMode monotone_mode_from_string(const std::string& s);
std::string to_string(MonotoneMode m);

bool is_monotone_event(std::span<const double> b, MonotoneMode mode = MonotoneMode::sorted_coefficients);

struct BernsteinState {
  std::vector<double> b;
  double sigma = 0.4;

  int order() const { return static_cast<int>(b.size()) - 1; }
};

struct BernsteinPrior {
  /// order_pmf[n - 1] = p(n), n = 1..n_max.
  std::vector<double> order_pmf;
  double tau1 = -2.0;
  double tau2 = 2.0;
  /// When set, sigma is unknown with an Exponential(rate) prior.
  std::optional<double> sigma_rate;

  /// Poisson(mean) restricted to {1..n_max} and renormalised.
  static BernsteinPrior truncated_poisson(double mean = 5.0, int n_max = 20, double tau1 = -2.0,
                                          double tau2 = 2.0);
  /// All prior mass on one order.
  static BernsteinPrior fixed_order(int n, double tau1 = -2.0, double tau2 = 2.0);

  int n_max() const { return static_cast<int>(order_pmf.size()); }
  double pmf(int n) const { return n >= 1 && n <= n_max() ? order_pmf[n - 1] : 0.0; }
  void validate() const;
  /// log p(n) + log pi_n(b) (+ sigma prior when unknown).
  double log_density(const BernsteinState& s) const;
};

/// Prior mass of sorted coefficients: sum_n p(n) / (n + 1)!.
double prior_prob_monotone(const BernsteinPrior& prior);

struct RegressionPoint {
  double x = 0.0;
  double y = 0.0;
};

struct RegressionData {
  std::vector<RegressionPoint> points;
  std::optional<double> sigma_known;

  void validate() const;
};

double reg_loglik(const BernsteinState& state, const RegressionData& data);

struct RjSettings {
  double coefficient_step = 0.3;
  /// Keep the chain inside the sorted-coefficient event.
  bool null_constrained = false;
};

/// One reversible-jump step: with probability 1/2 a reflected random walk on a
/// single coefficient, otherwise a jump to n +/- 1 (clamped to [1, n_max]) with
/// fresh coefficients drawn from the prior at the new order. Constrained mode
/// draws sorted coefficients instead and rejects unsorted walk steps.
mcmc::MoveStats rj_move(BernsteinState& state, const BernsteinPrior& prior, const RegressionData& data,
                        Rng& rng, const RjSettings& settings = {});

/// theta = (sigma, b_0, ..., b_n); no latent data.
class BernsteinModel final : public mcmc::Model {
 public:
  BernsteinModel(RegressionData data, BernsteinPrior prior, double sigma = 0.4,
                 MonotoneMode mode = MonotoneMode::sorted_coefficients, RjSettings rj = {},
                 std::size_t moves_per_sweep = 1);

  static BernsteinState state(std::span<const double> theta);
  static std::vector<double> theta(const BernsteinState& s);

  const RegressionData& data() const { return data_; }
  const BernsteinPrior& prior() const { return prior_; }
  double sigma() const { return sigma_; }
  MonotoneMode mode() const { return mode_; }

  mcmc::ChainState initial_state() const override;
  mcmc::ChainState initial_null_state() const override;
  double log_prior(std::span<const double> theta) const override;
  double complete_loglik(std::span<const double> theta, std::span<const double> latent) const override;
  mcmc::LogValue observed_loglik(std::span<const double> theta) const override;
  mcmc::MoveStats update_latent(std::span<const double>, std::vector<double>&, Rng&) const override {
    return {};
  }
  mcmc::LogValue missing_conditional_logdensity(std::span<const double>,
                                                std::span<const double>) const override {
    return {0.0, 0.0};
  }
  bool null_predicate(std::span<const double> theta) const override;
  std::vector<mcmc::ParameterBlock> parameter_blocks(bool null_constrained) const override;
  mcmc::MoveStats extra_move(mcmc::ChainState& state, Rng& rng, bool null_constrained) const override;
  std::vector<std::string> summary_names() const override { return {"order", "F(0.5)", "sigma"}; }
  std::vector<double> summaries(std::span<const double> theta) const override;

 private:
  RegressionData data_;
  BernsteinPrior prior_;
  double sigma_;
  MonotoneMode mode_;
  RjSettings rj_;
  std::size_t moves_per_sweep_;
};

struct MonotoneOdds {
  double posterior_prob = 0.0;
  double prior_prob = 0.0;
  double ratio = 0.0;
  /// Upper end of [0, 3/n] when no draw lies in the event; else equals posterior_prob.
  double posterior_upper = 0.0;
  bool zero_count = false;
};

MonotoneOdds monotone_odds(std::span<const mcmc::ParameterDraw> draws, const BernsteinPrior& prior,
                           MonotoneMode mode = MonotoneMode::sorted_coefficients);

/// Design points used in the regression examples.
std::vector<double> replicate_design(int k);
/// `per_half` interior points of an equal partition of each of [0, .5] and [.5, 1].
std::vector<double> partition_design(int per_half);
/// Every point of `design` listed twice.
std::vector<double> duplicate_design(std::span<const double> design);

struct DesignOutcome {
  ri::RIInput samples;
  ri::RIResult result;
};

/// Missing data = responses at `new_points`. Per joint draw m, y_l is simulated
/// from F_m and sigma; for null draw theta0,
///   w_m = sum_l [(y_l - F0(x_l))^2 - (y_l - F_m(x_l))^2] / (2 sigma^2).
DesignOutcome ri_design(std::span<const mcmc::ParameterDraw> draws,
                        std::span<const mcmc::ParameterDraw> null_draws,
                        std::span<const double> new_points, double sigma, const Rng& rng,
                        const ri::RIOptions& options = {});

}  // namespace relinfo::bernstein
