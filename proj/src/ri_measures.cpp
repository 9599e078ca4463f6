#include "relinfo/ri_measures.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "relinfo/rng.hpp"

namespace relinfo::ri {
namespace {

void require_finite(std::span<const double> x, const char* what) {
  for (std::size_t i = 0; i < x.size(); ++i) {
    if (!std::isfinite(x[i])) {
      std::ostringstream msg;
      msg << what << " value " << i << " is not finite (" << x[i] << ")";
      throw std::invalid_argument(msg.str());
    }
  }
}

double variance_of(std::span<const double> x) {
  if (x.size() < 2) {
    throw InsufficientSamplesError("variance needs at least 2 samples, got " +
                                   std::to_string(x.size()));
  }
  return sample_variance(x);
}

double mean_square(std::span<const double> x) {
  double s = 0.0;
  for (double v : x) s += v * v;
  return s / static_cast<double>(x.size());
}

double sd_of(const std::vector<double>& x) {
  return x.size() < 2 ? 0.0 : std::sqrt(sample_variance(x));
}

}  // namespace

void ObservedLodSamples::validate() const {
  if (values.empty()) throw InsufficientSamplesError("observed log-likelihood samples are empty");
  require_finite(values, "observed log-likelihood");
  if (se) {
    if (se->size() != values.size()) {
      throw std::invalid_argument("ell_se length " + std::to_string(se->size()) +
                                  " does not match ell length " + std::to_string(values.size()));
    }
    for (double s : *se) {
      if (!(s >= 0.0) || !std::isfinite(s)) {
        throw std::invalid_argument("ell_se entries must be finite and >= 0");
      }
    }
  }
}

void ConditionalRatioSamples::validate() const {
  if (values.empty()) {
    throw InsufficientSamplesError("ratio samples for null draw " +
                                   std::to_string(null_draw_id) + " are empty");
  }
  require_finite(values, "log conditional ratio");
}

double lod_variance(const ObservedLodSamples& ell) {
  require_finite(ell.values, "observed log-likelihood");
  return variance_of(ell.values);
}

VarianceEstimate ratio_variance(const ConditionalRatioSamples& w) {
  require_finite(w.values, "log conditional ratio");
  const double v = variance_of(w.values);
  const auto n = static_cast<double>(w.values.size());
  // Var(s^2) ~ mu4/n - sigma^4 (n - 3) / (n (n - 1))
  const double mu4 = central_moment(w.values, 4);
  const double var_of_var = mu4 / n - v * v * (n - 3.0) / (n * (n - 1.0));
  return {v, std::sqrt(std::max(0.0, var_of_var))};
}

double bi3(double v_lod, std::span<const double> v_ratios) {
  if (v_ratios.empty()) throw InsufficientSamplesError("bi3 needs at least one null draw");
  if (!(v_lod >= 0.0)) throw std::invalid_argument("v_lod must be >= 0");
  for (double r : v_ratios) {
    if (!(r >= 0.0)) throw std::invalid_argument("ratio variances must be >= 0");
  }
  const double vr = mean(v_ratios);
  if (v_lod == 0.0 && vr == 0.0) {
    throw DegenerateInformationError(
        "bi3 is 0/0: observed and conditional likelihoods are both flat");
  }
  return v_lod / (v_lod + vr);
}

double bi4(double v_lod, std::span<const double> v_ratios, std::span<const std::size_t> null_ids) {
  if (v_ratios.empty()) throw InsufficientSamplesError("bi4 needs at least one null draw");
  if (!(v_lod >= 0.0)) throw std::invalid_argument("v_lod must be >= 0");
  double s = 0.0;
  for (std::size_t j = 0; j < v_ratios.size(); ++j) {
    const double r = v_ratios[j];
    if (!(r >= 0.0)) throw std::invalid_argument("ratio variances must be >= 0");
    if (v_lod == 0.0 && r == 0.0) {
      const std::size_t id = j < null_ids.size() ? null_ids[j] : j;
      throw DegenerateInformationError("bi4 is 0/0 at null draw " + std::to_string(id) +
                                       ": observed and conditional likelihoods are both flat");
    }
    s += v_lod / (v_lod + r);
  }
  return s / static_cast<double>(v_ratios.size());
}

RIResult ri_compute(const ObservedLodSamples& ell, std::span<const ConditionalRatioSamples> ratios,
                    const RIOptions& options) {
  ell.validate();
  if (ratios.empty()) throw InsufficientSamplesError("no null draws supplied");
  for (std::size_t j = 0; j < ratios.size(); ++j) {
    ratios[j].validate();
    for (std::size_t k = 0; k < j; ++k) {
      if (ratios[k].null_draw_id == ratios[j].null_draw_id) {
        throw std::invalid_argument("duplicate null_draw_id " +
                                    std::to_string(ratios[j].null_draw_id));
      }
    }
  }

  RIResult out;
  out.n_theta_draws = ell.values.size();
  out.n_null_draws = ratios.size();
  out.n_mis_draws = ratios.front().values.size();

  const double sd_ell = ell.values.size() >= 2 ? std::sqrt(lod_variance(ell)) : 0.0;
  double se_penalty = 0.0;
  if (ell.se) {
    const double worst = *std::max_element(ell.se->begin(), ell.se->end());
    if (worst > options.se_warning_fraction * sd_ell) {
      std::ostringstream msg;
      msg << "plug-in log-likelihood se up to " << worst << " exceeds "
          << options.se_warning_fraction << " x sd(ell) = " << options.se_warning_fraction * sd_ell
          << "; estimation noise inflates v_lod";
      out.warnings.push_back(msg.str());
    }
    if (options.plugin_correction) se_penalty = mean_square(*ell.se);
  }

  auto corrected = [&](double v) { return std::max(0.0, v - se_penalty); };

  out.v_lod = corrected(lod_variance(ell));
  out.v_ratio_per_null.reserve(ratios.size());
  for (const auto& w : ratios) {
    out.v_ratio_per_null.push_back(ratio_variance(w).value);
    out.null_draw_ids.push_back(w.null_draw_id);
  }
  out.bi3 = bi3(out.v_lod, out.v_ratio_per_null);
  out.bi4 = bi4(out.v_lod, out.v_ratio_per_null, out.null_draw_ids);

  if (options.bootstrap_replicates == 0) return out;

  // Paired bootstrap when every ratio series is indexed by the same joint
  // draws as ell; otherwise each series is resampled on its own.
  const std::size_t n_ell = ell.values.size();
  const bool paired = std::all_of(ratios.begin(), ratios.end(),
                                  [&](const auto& w) { return w.values.size() == n_ell; });

  Rng rng(options.bootstrap_seed);
  std::vector<double> boot_bi3;
  std::vector<double> boot_bi4;
  std::vector<double> ell_star(n_ell);
  std::vector<double> se_star;
  std::vector<std::size_t> idx(n_ell);
  std::vector<double> w_star;
  std::vector<double> v_star(ratios.size());
  std::size_t degenerate = 0;
  for (std::size_t b = 0; b < options.bootstrap_replicates; ++b) {
    for (std::size_t i = 0; i < n_ell; ++i) idx[i] = rng.index(n_ell);
    for (std::size_t i = 0; i < n_ell; ++i) ell_star[i] = ell.values[idx[i]];
    double v_lod_star = sample_variance(ell_star);
    if (options.plugin_correction && ell.se) {
      se_star.resize(n_ell);
      for (std::size_t i = 0; i < n_ell; ++i) se_star[i] = (*ell.se)[idx[i]];
      v_lod_star = std::max(0.0, v_lod_star - mean_square(se_star));
    }
    for (std::size_t j = 0; j < ratios.size(); ++j) {
      const auto& w = ratios[rng.index(ratios.size())].values;
      w_star.resize(w.size());
      if (paired) {
        for (std::size_t i = 0; i < w.size(); ++i) w_star[i] = w[idx[i]];
      } else {
        for (std::size_t i = 0; i < w.size(); ++i) w_star[i] = w[rng.index(w.size())];
      }
      v_star[j] = w_star.size() >= 2 ? corrected(sample_variance(w_star)) : 0.0;
    }
    try {
      boot_bi3.push_back(bi3(v_lod_star, v_star));
      boot_bi4.push_back(bi4(v_lod_star, v_star));
    } catch (const DegenerateInformationError&) {
      ++degenerate;
    }
  }
  if (degenerate > 0) {
    out.warnings.push_back(std::to_string(degenerate) + " of " +
                           std::to_string(options.bootstrap_replicates) +
                           " bootstrap replicates were degenerate and skipped");
  }
  out.mc_se_bi3 = sd_of(boot_bi3);
  out.mc_se_bi4 = sd_of(boot_bi4);
  return out;
}

RIInput ri_input_from_json(const nlohmann::json& j) {
  for (const auto& [key, _] : j.items()) {
    if (key != "ell" && key != "ell_se" && key != "ratios") {
      throw std::invalid_argument("unknown key in RI input: " + key);
    }
  }
  RIInput in;
  in.ell.values = j.at("ell").get<std::vector<double>>();
  if (j.contains("ell_se") && !j.at("ell_se").is_null()) {
    in.ell.se = j.at("ell_se").get<std::vector<double>>();
  }
  for (const auto& r : j.at("ratios")) {
    ConditionalRatioSamples w;
    w.null_draw_id = r.at("null_draw_id").get<std::size_t>();
    w.values = r.at("values").get<std::vector<double>>();
    in.ratios.push_back(std::move(w));
  }
  return in;
}

nlohmann::json to_json(const RIInput& in) {
  nlohmann::json j;
  j["ell"] = in.ell.values;
  if (in.ell.se) j["ell_se"] = *in.ell.se;
  j["ratios"] = nlohmann::json::array();
  for (const auto& w : in.ratios) {
    j["ratios"].push_back({{"null_draw_id", w.null_draw_id}, {"values", w.values}});
  }
  return j;
}

nlohmann::json to_json(const RIResult& r) {
  return {{"bi3", r.bi3},
          {"bi4", r.bi4},
          {"v_lod", r.v_lod},
          {"v_ratio_per_null", r.v_ratio_per_null},
          {"null_draw_ids", r.null_draw_ids},
          {"mc_se_bi3", r.mc_se_bi3},
          {"mc_se_bi4", r.mc_se_bi4},
          {"n_theta_draws", r.n_theta_draws},
          {"n_null_draws", r.n_null_draws},
          {"n_mis_draws", r.n_mis_draws},
          {"warnings", r.warnings}};
}

RIResult ri_result_from_json(const nlohmann::json& j) {
  RIResult r;
  r.bi3 = j.at("bi3").get<double>();
  r.bi4 = j.at("bi4").get<double>();
  r.v_lod = j.at("v_lod").get<double>();
  r.v_ratio_per_null = j.at("v_ratio_per_null").get<std::vector<double>>();
  r.null_draw_ids = j.value("null_draw_ids", std::vector<std::size_t>{});
  r.mc_se_bi3 = j.at("mc_se_bi3").get<double>();
  r.mc_se_bi4 = j.at("mc_se_bi4").get<double>();
  r.n_theta_draws = j.value("n_theta_draws", std::size_t{0});
  r.n_null_draws = j.value("n_null_draws", r.v_ratio_per_null.size());
  r.n_mis_draws = j.value("n_mis_draws", std::size_t{0});
  r.warnings = j.value("warnings", std::vector<std::string>{});
  return r;
}

}  // namespace relinfo::ri
