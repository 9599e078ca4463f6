#include "relinfo/mcmc.hpp"

#include <algorithm>
#include <cmath>
#include <future>
#include <limits>
#include <sstream>

#include "relinfo/numeric.hpp"

namespace relinfo::mcmc {
namespace {

constexpr double kAdaptExponent = 0.6;

double to_transformed(double v, Transform t) { return t == Transform::log ? std::log(v) : v; }
double from_transformed(double x, Transform t) { return t == Transform::log ? std::exp(x) : x; }

double ess_or_nan(std::span<const double> series) {
  try {
    return effective_sample_size(series);
  } catch (const DegenerateSeriesError&) {
    return std::numeric_limits<double>::quiet_NaN();
  } catch (const InsufficientSamplesError&) {
    return std::numeric_limits<double>::quiet_NaN();
  }
}

}  // namespace

void ChainConfig::validate() const {
  if (n_iterations == 0) throw std::invalid_argument("n_iterations must be positive");
  if (burn_in >= n_iterations) throw std::invalid_argument("burn_in must be < n_iterations");
  if (thinning < 1) throw std::invalid_argument("thinning must be >= 1");
  if (!(target_acceptance > 0.0 && target_acceptance < 1.0)) {
    throw std::invalid_argument("target_acceptance must lie in (0, 1)");
  }
  for (double s : initial_scales) {
    if (!(s > 0.0)) throw std::invalid_argument("initial scales must be positive");
  }
}

DrawSet run_chain(const Model& model, const ChainConfig& config) {
  config.validate();
  Rng rng(config.seed, config.chain_index);

  ChainState state =
      config.null_constrained ? model.initial_null_state() : model.initial_state();
  if (config.null_constrained && !model.null_predicate(state.theta)) {
    throw ChainInitError("initial state lies outside the null region of a constrained chain");
  }
  double lprior = model.log_prior(state.theta);
  double lcomp = std::isfinite(lprior) ? model.complete_loglik(state.theta, state.latent)
                                       : -std::numeric_limits<double>::infinity();
  if (!std::isfinite(lprior) || !std::isfinite(lcomp)) {
    throw ChainInitError("initial state has zero posterior density");
  }

  std::vector<ParameterBlock> blocks = model.parameter_blocks(config.null_constrained);
  if (!config.initial_scales.empty()) {
    if (config.initial_scales.size() != blocks.size()) {
      throw std::invalid_argument("initial_scales has " +
                                  std::to_string(config.initial_scales.size()) +
                                  " entries but the model has " + std::to_string(blocks.size()) +
                                  " blocks");
    }
    for (std::size_t b = 0; b < blocks.size(); ++b) blocks[b].scale = config.initial_scales[b];
  }
  std::vector<double> scale(blocks.size());
  std::vector<double> log_scale(blocks.size());
  for (std::size_t b = 0; b < blocks.size(); ++b) {
    scale[b] = blocks[b].scale;
    log_scale[b] = std::log(scale[b]);
  }

  std::vector<MoveStats> block_stats(blocks.size());
  MoveStats latent_stats;
  MoveStats extra_stats;

  DrawSet out;
  out.config = config;
  out.summary_names = model.summary_names();
  out.draws.reserve((config.n_iterations - config.burn_in) / config.thinning);

  std::vector<double> proposal;
  for (std::size_t iter = 0; iter < config.n_iterations; ++iter) {
    const bool burning = iter < config.burn_in;

    for (std::size_t b = 0; b < blocks.size(); ++b) {
      const auto& block = blocks[b];
      proposal = state.theta;
      double log_jacobian = 0.0;
      for (std::size_t idx : block.indices) {
        const double x = to_transformed(state.theta[idx], block.transform);
        double x_new = x + scale[b] * rng.normal();
        if (block.reflect_upper && x_new > *block.reflect_upper) {
          x_new = 2.0 * *block.reflect_upper - x_new;
        }
        proposal[idx] = from_transformed(x_new, block.transform);
        if (block.transform == Transform::log) log_jacobian += x_new - x;
      }

      bool accepted = false;
      double lprior_new = model.log_prior(proposal);
      if (std::isfinite(lprior_new) &&
          (!config.null_constrained || model.null_predicate(proposal))) {
        const double lcomp_new = model.complete_loglik(proposal, state.latent);
        const double log_alpha = (lprior_new + lcomp_new) - (lprior + lcomp) + log_jacobian;
        if (std::isfinite(log_alpha) && std::log(rng.uniform_open_zero()) < log_alpha) {
          state.theta.swap(proposal);
          lprior = lprior_new;
          lcomp = lcomp_new;
          accepted = true;
        }
      }

      if (burning) {
        if (config.adapt) {
          const double gain = 1.0 / std::pow(static_cast<double>(iter + 1), kAdaptExponent);
          log_scale[b] += gain * ((accepted ? 1.0 : 0.0) - config.target_acceptance);
          scale[b] = std::exp(log_scale[b]);
        }
      } else {
        block_stats[b] += MoveStats{accepted ? 1u : 0u, 1};
      }
    }

    const MoveStats ls = model.update_latent(state.theta, state.latent, rng);
    const MoveStats es = model.extra_move(state, rng, config.null_constrained);
    if (ls.proposed > 0 || es.proposed > 0) {
      lprior = model.log_prior(state.theta);
      lcomp = model.complete_loglik(state.theta, state.latent);
    }
    if (!burning) {
      latent_stats += ls;
      extra_stats += es;
    }

    if ((iter + 1) % config.thinning == 0) {
      out.scale_trace_iterations.push_back(iter + 1);
      out.scale_trace.push_back(scale);
    }

    if (!burning && (iter - config.burn_in + 1) % config.thinning == 0) {
      ParameterDraw d;
      d.iteration = iter + 1;
      d.theta = state.theta;
      d.latent = state.latent;
      const LogValue obs = model.observed_loglik(state.theta);
      d.obs_loglik = obs.value;
      d.obs_loglik_se = obs.se;
      d.log_prior = lprior;
      out.draws.push_back(std::move(d));
    }
  }

  for (std::size_t b = 0; b < blocks.size(); ++b) {
    const auto& s = block_stats[b];
    out.blocks.push_back({blocks[b].name,
                          s.proposed ? static_cast<double>(s.accepted) / s.proposed : 0.0,
                          scale[b]});
  }
  out.latent_acceptance =
      latent_stats.proposed ? static_cast<double>(latent_stats.accepted) / latent_stats.proposed : 0.0;
  out.extra_acceptance =
      extra_stats.proposed ? static_cast<double>(extra_stats.accepted) / extra_stats.proposed : 0.0;

  std::vector<double> series(out.draws.size());
  for (std::size_t k = 0; k < out.summary_names.size(); ++k) {
    for (std::size_t i = 0; i < out.draws.size(); ++i) {
      series[i] = model.summaries(out.draws[i].theta)[k];
    }
    out.ess.push_back(ess_or_nan(series));
  }
  return out;
}

std::vector<DrawSet> run_chains(const Model& model, const ChainConfig& config,
                                std::size_t n_chains) {
  if (n_chains == 0) throw std::invalid_argument("need at least one chain");
  std::vector<std::future<DrawSet>> jobs;
  for (std::size_t k = 0; k < n_chains; ++k) {
    ChainConfig c = config;
    c.chain_index = config.chain_index + k;
    jobs.push_back(std::async(std::launch::async, [&model, c] { return run_chain(model, c); }));
  }
  std::vector<DrawSet> out;
  for (auto& j : jobs) out.push_back(j.get());
  return out;
}

std::vector<ParameterDraw> pool_draws(std::span<const DrawSet> chains) {
  std::vector<ParameterDraw> out;
  for (const auto& c : chains) out.insert(out.end(), c.draws.begin(), c.draws.end());
  return out;
}

NullDraws filter_null(std::span<const ParameterDraw> draws, const Model& model,
                      std::size_t n_min) {
  if (draws.empty()) throw InsufficientSamplesError("no draws to filter");
  NullDraws out;
  for (std::size_t i = 0; i < draws.size(); ++i) {
    if (model.null_predicate(draws[i].theta)) out.indices.push_back(i);
  }
  out.n_total = static_cast<double>(draws.size());
  out.posterior_probability = static_cast<double>(out.indices.size()) / out.n_total;
  if (out.indices.size() < n_min) {
    std::ostringstream msg;
    msg << "only " << out.indices.size() << " of " << draws.size()
        << " posterior draws satisfy the null hypothesis (need " << n_min
        << "); the null has small posterior probability, so sampling its conditional posterior "
           "by filtering is too costly. Rerun with a constrained chain (proposals kept inside "
           "the null region), e.g. set ri.null_fallback = \"constrained\".";
    throw InsufficientNullDrawsError(msg.str());
  }
  return out;
}

std::vector<std::size_t> thin_evenly(std::span<const std::size_t> indices, std::size_t max_count) {
  if (max_count == 0 || indices.size() <= max_count) return {indices.begin(), indices.end()};
  std::vector<std::size_t> out;
  out.reserve(max_count);
  for (std::size_t i = 0; i < max_count; ++i) out.push_back(indices[i * indices.size() / max_count]);
  return out;
}

std::vector<ParameterDraw> gather(std::span<const ParameterDraw> draws,
                                  std::span<const std::size_t> indices) {
  std::vector<ParameterDraw> out;
  out.reserve(indices.size());
  for (std::size_t i : indices) out.push_back(draws[i]);
  return out;
}

double effective_sample_size(std::span<const double> series) {
  const std::size_t n = series.size();
  if (n < 10) {
    throw InsufficientSamplesError("ESS needs at least 10 values, got " + std::to_string(n));
  }
  const double m = mean(series);
  auto autocov = [&](std::size_t lag) {
    double s = 0.0;
    for (std::size_t i = 0; i + lag < n; ++i) s += (series[i] - m) * (series[i + lag] - m);
    return s / static_cast<double>(n);
  };
  const bool constant = std::all_of(series.begin(), series.end(), [&](double v) { return v == series[0]; });
  const double c0 = autocov(0);
  if (constant || !(c0 > 0.0)) throw DegenerateSeriesError("ESS of a constant series is undefined");

  // Geyer: sum consecutive-lag pairs while they stay positive.
  double tau = -1.0;
  for (std::size_t lag = 0; lag + 1 < n; lag += 2) {
    const double pair = (autocov(lag) + autocov(lag + 1)) / c0;
    if (!(pair > 0.0)) break;
    tau += 2.0 * pair;
  }
  // Antithetic series give tau < 1 (possibly negative); report n for those.
  return tau > 1.0 ? static_cast<double>(n) / tau : static_cast<double>(n);
}

}  // namespace relinfo::mcmc
