#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <numbers>
#include <sstream>

#include "relinfo/draw_io.hpp"
#include "relinfo/mcmc.hpp"
#include "relinfo/numeric.hpp"
#include "relinfo/rng.hpp"

using namespace relinfo;
using namespace relinfo::mcmc;

namespace {

// mu ~ N(0, tau2), y_i ~ N(mu, 1). No latent data.
class NormalMeanModel final : public Model {
 public:
  NormalMeanModel(std::vector<double> y, double tau2) : y_(std::move(y)), tau2_(tau2) {}

  double post_var() const { return 1.0 / (1.0 / tau2_ + static_cast<double>(y_.size())); }
  double post_mean() const {
    double s = 0;
    for (double v : y_) s += v;
    return post_var() * s;
  }

  ChainState initial_state() const override { return {{0.0}, {}}; }
  ChainState initial_null_state() const override { return {{-0.1}, {}}; }
  double log_prior(std::span<const double> t) const override { return -0.5 * t[0] * t[0] / tau2_; }
  double complete_loglik(std::span<const double> t, std::span<const double>) const override {
    return observed_loglik(t).value;
  }
  LogValue observed_loglik(std::span<const double> t) const override {
    double s = 0;
    for (double v : y_) s -= 0.5 * (v - t[0]) * (v - t[0]);
    return {s, 0.0};
  }
  MoveStats update_latent(std::span<const double>, std::vector<double>&, Rng&) const override {
    return {};
  }
  LogValue missing_conditional_logdensity(std::span<const double>,
                                          std::span<const double>) const override {
    return {0.0, 0.0};
  }
  bool null_predicate(std::span<const double> t) const override { return t[0] < 0.0; }
  std::vector<ParameterBlock> parameter_blocks(bool constrained) const override {
    ParameterBlock b{"mu", {0}, 1.0, Transform::identity, std::nullopt};
    if (constrained) b.reflect_upper = 0.0;
    return {b};
  }
  std::vector<std::string> summary_names() const override { return {"mu"}; }
  std::vector<double> summaries(std::span<const double> t) const override { return {t[0]}; }

 private:
  std::vector<double> y_;
  double tau2_;
};

// Continuous x on [0, 3) whose prior is piecewise constant with masses p.
class ThreeStateModel final : public Model {
 public:
  static constexpr double p[3] = {0.2, 0.3, 0.5};

  ChainState initial_state() const override { return {{0.5}, {}}; }
  double log_prior(std::span<const double> t) const override {
    if (!(t[0] >= 0.0 && t[0] < 3.0)) return -INFINITY;
    return std::log(p[static_cast<int>(t[0])]);
  }
  double complete_loglik(std::span<const double>, std::span<const double>) const override {
    return 0.0;
  }
  LogValue observed_loglik(std::span<const double>) const override { return {0.0, 0.0}; }
  MoveStats update_latent(std::span<const double>, std::vector<double>&, Rng&) const override {
    return {};
  }
  LogValue missing_conditional_logdensity(std::span<const double>,
                                          std::span<const double>) const override {
    return {0.0, 0.0};
  }
  bool null_predicate(std::span<const double> t) const override { return t[0] < 1.0; }
  std::vector<ParameterBlock> parameter_blocks(bool) const override {
    return {{"x", {0}, 1.5, Transform::identity, std::nullopt}};
  }
  std::vector<std::string> summary_names() const override { return {"x"}; }
  std::vector<double> summaries(std::span<const double> t) const override { return {t[0]}; }
};

std::vector<double> component(const DrawSet& ds, std::size_t i) {
  std::vector<double> out;
  for (const auto& d : ds.draws) out.push_back(d.theta[i]);
  return out;
}

double mc_se(const std::vector<double>& x) {
  return std::sqrt(sample_variance(x) / effective_sample_size(x));
}

ChainConfig short_config(std::uint64_t seed) {
  ChainConfig c;
  c.n_iterations = 60'000;
  c.burn_in = 5'000;
  c.thinning = 5;
  c.seed = seed;
  return c;
}

}  // namespace

TEST_CASE("ChainConfig validation") {
  ChainConfig c;
  CHECK_NOTHROW(c.validate());
  c.burn_in = c.n_iterations;
  CHECK_THROWS_AS(c.validate(), std::invalid_argument);
  c = {};
  c.thinning = 0;
  CHECK_THROWS_AS(c.validate(), std::invalid_argument);
  c = {};
  c.target_acceptance = 1.0;
  CHECK_THROWS_AS(c.validate(), std::invalid_argument);
}

TEST_CASE("draw count and acceptance rates") {
  const NormalMeanModel model({0.3, -0.2, 1.1}, 4.0);
  ChainConfig c;
  c.n_iterations = 1003;
  c.burn_in = 100;
  c.thinning = 7;
  const auto ds = run_chain(model, c);
  CHECK(ds.draws.size() == (1003 - 100) / 7);
  REQUIRE(ds.blocks.size() == 1);
  CHECK(ds.blocks[0].acceptance_rate >= 0.0);
  CHECK(ds.blocks[0].acceptance_rate <= 1.0);
  CHECK(ds.draws.front().iteration == 107);
}

TEST_CASE("conjugate normal-mean posterior is recovered") {
  Rng rng(3);
  std::vector<double> y(12);
  for (auto& v : y) v = rng.normal(0.8, 1.0);
  const NormalMeanModel model(y, 4.0);
  const auto ds = run_chain(model, short_config(7));
  const auto mu = component(ds, 0);

  CHECK(std::abs(mean(mu) - model.post_mean()) < 3.0 * mc_se(mu));

  std::vector<double> sq;
  for (double v : mu) sq.push_back((v - model.post_mean()) * (v - model.post_mean()));
  CHECK(std::abs(mean(sq) - model.post_var()) < 3.0 * mc_se(sq));
  CHECK(ds.blocks[0].acceptance_rate == doctest::Approx(0.3).epsilon(0.25));
}

TEST_CASE("zero-data chain recovers the prior") {
  const NormalMeanModel model({}, 2.0);
  const auto mu = component(run_chain(model, short_config(12)), 0);
  CHECK(std::abs(mean(mu)) < 3.0 * mc_se(mu));
  std::vector<double> sq;
  for (double v : mu) sq.push_back(v * v);
  CHECK(std::abs(mean(sq) - 2.0) < 3.0 * mc_se(sq));
}

TEST_CASE("three-state toy reaches its stationary distribution") {
  const ThreeStateModel model;
  auto c = short_config(21);
  c.n_iterations = 200'000;
  const auto ds = run_chain(model, c);
  for (int s = 0; s < 3; ++s) {
    std::vector<double> ind;
    for (const auto& d : ds.draws) ind.push_back(static_cast<int>(d.theta[0]) == s ? 1.0 : 0.0);
    CHECK(std::abs(mean(ind) - ThreeStateModel::p[s]) < 3.0 * mc_se(ind));
  }
}

TEST_CASE("same seed and config give identical draws") {
  const NormalMeanModel model({0.5, 0.1}, 1.0);
  ChainConfig c;
  c.n_iterations = 5000;
  c.burn_in = 1000;
  c.seed = 99;
  const auto a = run_chain(model, c);
  const auto b = run_chain(model, c);
  REQUIRE(a.draws.size() == b.draws.size());
  for (std::size_t i = 0; i < a.draws.size(); ++i) CHECK(a.draws[i].theta == b.draws[i].theta);
  CHECK(a.scale_trace == b.scale_trace);

  c.seed = 100;
  CHECK(run_chain(model, c).draws.back().theta != a.draws.back().theta);
}

TEST_CASE("parallel chains use distinct streams and match serial runs") {
  const NormalMeanModel model({0.5, 0.1}, 1.0);
  ChainConfig c;
  c.n_iterations = 3000;
  c.burn_in = 500;
  const auto chains = run_chains(model, c, 3);
  REQUIRE(chains.size() == 3);
  CHECK(chains[0].draws.back().theta != chains[1].draws.back().theta);
  ChainConfig c2 = c;
  c2.chain_index = 2;
  CHECK(run_chain(model, c2).draws.back().theta == chains[2].draws.back().theta);
  CHECK(pool_draws(chains).size() == 3 * chains[0].draws.size());
}

TEST_CASE("scales freeze after burn-in") {
  const NormalMeanModel model({0.5, 0.1, 2.0}, 1.0);
  ChainConfig c;
  c.n_iterations = 4000;
  c.burn_in = 1500;
  c.thinning = 10;
  c.initial_scales = {20.0};
  const auto ds = run_chain(model, c);
  std::vector<double> after;
  bool moved_during_burn_in = false;
  for (std::size_t i = 0; i < ds.scale_trace.size(); ++i) {
    if (ds.scale_trace_iterations[i] > c.burn_in) after.push_back(ds.scale_trace[i][0]);
    else if (ds.scale_trace[i][0] != 20.0) moved_during_burn_in = true;
  }
  CHECK(moved_during_burn_in);
  REQUIRE(!after.empty());
  for (double s : after) CHECK(s == after.front());
  CHECK(ds.blocks[0].final_scale == after.front());

  c.adapt = false;
  for (const auto& row : run_chain(model, c).scale_trace) CHECK(row[0] == 20.0);
}

TEST_CASE("constrained chain never leaves the null region") {
  const NormalMeanModel model({2.0, 2.5, 1.5}, 1.0);
  ChainConfig c;
  c.n_iterations = 5000;
  c.burn_in = 500;
  c.null_constrained = true;
  for (const auto& d : run_chain(model, c).draws) CHECK(d.theta[0] < 0.0);
}

TEST_CASE("filter_null") {
  std::vector<ParameterDraw> draws(60);
  for (std::size_t i = 0; i < draws.size(); ++i) draws[i].theta = {-1.0 - static_cast<double>(i)};
  const NormalMeanModel model({}, 1.0);
  const auto all = filter_null(draws, model);
  CHECK(all.indices.size() == 60);
  CHECK(all.indices[59] == 59);
  CHECK(all.posterior_probability == 1.0);

  for (auto& d : draws) d.theta[0] = 1.0;
  try {
    filter_null(draws, model);
    FAIL("expected an insufficient-null-draws error");
  } catch (const InsufficientNullDrawsError& e) {
    CHECK(std::string(e.what()).find("constrained") != std::string::npos);
  }
  draws[3].theta[0] = -2.0;
  const auto one = filter_null(draws, model, 1);
  CHECK(one.indices == std::vector<std::size_t>{3});
  CHECK(one.posterior_probability == doctest::Approx(1.0 / 60));
  CHECK_THROWS(filter_null(std::span<const ParameterDraw>{}, model));
}

TEST_CASE("effective_sample_size") {
  Rng rng(1234);
  std::vector<double> iid(10'000);
  for (auto& v : iid) v = rng.normal();
  CHECK(std::abs(effective_sample_size(iid) - 1e4) < 0.15 * 1e4);

  std::vector<double> ar(10'000);
  double x = rng.normal() / std::sqrt(1 - 0.81);
  for (auto& v : ar) {
    x = 0.9 * x + rng.normal();
    v = x;
  }
  const double expected = 1e4 * 0.1 / 1.9;
  CHECK(std::abs(effective_sample_size(ar) - expected) < 0.25 * expected);

  CHECK_THROWS_AS(effective_sample_size(std::vector<double>(100, 3.0)), DegenerateSeriesError);
  CHECK_THROWS(effective_sample_size(std::vector<double>{1, 2, 3}));

  // Strongly anti-correlated series must still be clamped to n.
  std::vector<double> alt(1000);
  for (std::size_t i = 0; i < alt.size(); ++i) alt[i] = (i % 2 ? 1.0 : -1.0) + 0.01 * rng.normal();
  const double e = effective_sample_size(alt);
  CHECK(e > 0.0);
  CHECK(e <= 1000.0);
}

TEST_CASE("draws persist through CSV and sidecar exactly") {
  const NormalMeanModel model({0.5, 0.1}, 1.0);
  ChainConfig c;
  c.n_iterations = 600;
  c.burn_in = 100;
  const auto chains = run_chains(model, c, 2);
  const auto dir = std::filesystem::temp_directory_path() / "relinfo_test_draws";
  std::filesystem::create_directories(dir);
  save_draws(dir / "draws.csv", dir / "draws.json", chains);
  const auto back = load_draws(dir / "draws.csv", dir / "draws.json");
  REQUIRE(back.size() == 2);
  for (std::size_t k = 0; k < 2; ++k) {
    REQUIRE(back[k].draws.size() == chains[k].draws.size());
    for (std::size_t i = 0; i < back[k].draws.size(); ++i) {
      CHECK(back[k].draws[i].theta == chains[k].draws[i].theta);
      CHECK(back[k].draws[i].obs_loglik == chains[k].draws[i].obs_loglik);
      CHECK(back[k].draws[i].iteration == chains[k].draws[i].iteration);
    }
    CHECK(back[k].blocks[0].final_scale == chains[k].blocks[0].final_scale);
    CHECK(back[k].config.seed == chains[k].config.seed);
  }

  std::ostringstream csv;
  write_draws_csv(csv, chains);
  std::string text = csv.str();
  const auto third = text.find('\n', text.find('\n', text.find('\n') + 1) + 1);
  text.insert(third - 1, "x");
  std::istringstream bad(text);
  try {
    read_draws(bad, draws_metadata(chains));
    FAIL("expected a parse error");
  } catch (const ParseError& e) {
    CHECK(std::string(e.what()).find("row 3") != std::string::npos);
  }
}
