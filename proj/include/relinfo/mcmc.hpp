#pragma once

// Metropolis-within-Gibbs over an abstract augmented-posterior model.
//
// One sweep updates each parameter block by random-walk Metropolis on its
// transformed scale, then runs the model's latent-data kernel once, then the
// model's own extra move (if any). Scales adapt by Robbins-Monro during
// burn-in only and are frozen afterwards.

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "relinfo/rng.hpp"

namespace relinfo::mcmc {

class ChainInitError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class InsufficientNullDrawsError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class DegenerateSeriesError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

enum class Transform { identity, log };

struct ParameterBlock {
  std::string name;
  std::vector<std::size_t> indices;
  double scale = 0.1;
  Transform transform = Transform::identity;
  /// Proposals above this bound (on the transformed scale) are reflected back.
  std::optional<double> reflect_upper;
};

/// A log-density value with the standard error of its estimate (0 when exact).
struct LogValue {
  double value = 0.0;
  double se = 0.0;
};

struct MoveStats {
  std::size_t accepted = 0;
  std::size_t proposed = 0;

  MoveStats& operator+=(const MoveStats& o) {
    accepted += o.accepted;
    proposed += o.proposed;
    return *this;
  }
};

struct ChainState {
  std::vector<double> theta;
  std::vector<double> latent;
};

/// What a model supplies to the sampler. theta and the latent data Y_mis are
/// flat vectors whose layout belongs to the model.
class Model {
 public:
  virtual ~Model() = default;

  /// Starting point with finite log prior and complete log-likelihood.
  virtual ChainState initial_state() const = 0;
  /// Starting point for null-constrained chains; must satisfy null_predicate.
  virtual ChainState initial_null_state() const { return initial_state(); }
  virtual double log_prior(std::span<const double> theta) const = 0;
  /// log P(Y_ob, Y_mis | theta); -inf outside the support.
  virtual double complete_loglik(std::span<const double> theta,
                                 std::span<const double> latent) const = 0;
  /// log P(Y_ob | theta), with se > 0 when estimated.
  virtual LogValue observed_loglik(std::span<const double> theta) const = 0;
  /// A Markov kernel leaving P(Y_mis | Y_ob, theta) invariant.
  virtual MoveStats update_latent(std::span<const double> theta, std::vector<double>& latent,
                                  Rng& rng) const = 0;
  /// log P(Y_mis | Y_ob, theta).
  virtual LogValue missing_conditional_logdensity(std::span<const double> theta,
                                                  std::span<const double> latent) const = 0;
  virtual bool null_predicate(std::span<const double> theta) const = 0;
  virtual std::vector<ParameterBlock> parameter_blocks(bool null_constrained) const = 0;

  /// Model-specific move on the whole state (e.g. a dimension-changing jump).
  virtual MoveStats extra_move(ChainState& /*state*/, Rng& /*rng*/,
                               bool /*null_constrained*/) const {
    return {};
  }

  /// Scalar summaries of theta used for ESS diagnostics.
  virtual std::vector<std::string> summary_names() const = 0;
  virtual std::vector<double> summaries(std::span<const double> theta) const = 0;
};

struct ChainConfig {
  std::size_t n_iterations = 50'000;
  std::size_t burn_in = 10'000;
  std::size_t thinning = 10;
  /// Overrides the model's block scales when nonempty (one per block).
  std::vector<double> initial_scales;
  bool adapt = true;
  double target_acceptance = 0.3;
  std::uint64_t seed = 1;
  std::uint64_t chain_index = 0;
  /// Restrict the chain to the null region (constrained fallback sampler).
  bool null_constrained = false;

  void validate() const;
};

struct ParameterDraw {
  std::size_t iteration = 0;
  std::vector<double> theta;
  std::vector<double> latent;
  double obs_loglik = 0.0;
  double obs_loglik_se = 0.0;
  double log_prior = 0.0;
};

struct BlockDiagnostics {
  std::string name;
  double acceptance_rate = 0.0;
  double final_scale = 0.0;
};

struct DrawSet {
  std::vector<ParameterDraw> draws;
  std::vector<BlockDiagnostics> blocks;
  double latent_acceptance = 0.0;
  double extra_acceptance = 0.0;
  std::vector<std::string> summary_names;
  /// ESS per summary; NaN where the series is constant.
  std::vector<double> ess;
  /// Block scales recorded every `thinning` iterations, burn-in included.
  std::vector<std::size_t> scale_trace_iterations;
  std::vector<std::vector<double>> scale_trace;
  ChainConfig config;
};

DrawSet run_chain(const Model& model, const ChainConfig& config);

/// Runs `n_chains` chains, chain k on stream (seed, k), concurrently.
std::vector<DrawSet> run_chains(const Model& model, const ChainConfig& config,
                                std::size_t n_chains);

/// Concatenates draws of several chains in chain order.
std::vector<ParameterDraw> pool_draws(std::span<const DrawSet> chains);

struct NullDraws {
  std::vector<std::size_t> indices;  ///< positions in the source draw list
  double posterior_probability = 0.0;
  double n_total = 0.0;
};

/// Draws satisfying the null predicate, in order. Throws
/// InsufficientNullDrawsError when fewer than `n_min` survive.
NullDraws filter_null(std::span<const ParameterDraw> draws, const Model& model,
                      std::size_t n_min = 50);

/// At most `max_count` entries spread evenly over `indices` (0 keeps all).
std::vector<std::size_t> thin_evenly(std::span<const std::size_t> indices, std::size_t max_count);

/// The draws at `indices`, in order.
std::vector<ParameterDraw> gather(std::span<const ParameterDraw> draws,
                                  std::span<const std::size_t> indices);

/// Initial-positive-sequence ESS estimator; result in (0, n].
double effective_sample_size(std::span<const double> series);

}  // namespace relinfo::mcmc
