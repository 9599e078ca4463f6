#include "relinfo/report.hpp"

#include <cmath>
#include <iomanip>
#include <limits>
#include <sstream>
#include <stdexcept>

namespace relinfo {
namespace {

using nlohmann::json;

json number_or_null(double v) { return std::isfinite(v) ? json(v) : json(nullptr); }

double number_from(const json& j) {
  return j.is_null() ? std::numeric_limits<double>::quiet_NaN() : j.get<double>();
}

}  // namespace

ChainDiagnostics diagnostics_of(const mcmc::DrawSet& ds, std::string label) {
  return {std::move(label), ds.blocks, ds.latent_acceptance, ds.extra_acceptance, ds.summary_names, ds.ess};
}

void Report::choose_preferred() {
  preferred.reset();
  if (results.size() < 2) return;
  const ScenarioResult* best = &results.front();
  for (const auto& r : results) {
    if (r.result.bi3 < best->result.bi3) best = &r;
  }
  preferred = best->name;
}

json to_json(const Report& r) {
  json results = json::array();
  for (const auto& s : r.results) {
    json e{{"name", s.name}, {"result", ri::to_json(s.result)}};
    if (s.n_new) e["n_new"] = *s.n_new;
    if (s.points) e["points"] = *s.points;
    results.push_back(std::move(e));
  }
  json diagnostics = json::array();
  for (const auto& d : r.diagnostics) {
    json blocks = json::array();
    for (const auto& b : d.blocks) {
      blocks.push_back({{"name", b.name}, {"acceptance_rate", b.acceptance_rate}, {"final_scale", b.final_scale}});
    }
    json ess = json::object();
    for (std::size_t i = 0; i < d.summary_names.size(); ++i) ess[d.summary_names[i]] = number_or_null(d.ess[i]);
    diagnostics.push_back({{"label", d.label},
                           {"blocks", blocks},
                           {"latent_acceptance", d.latent_acceptance},
                           {"extra_acceptance", d.extra_acceptance},
                           {"ess_order", d.summary_names},
                           {"ess", ess}});
  }
  return {{"format", "relinfo-report/1"},
          {"model", r.model},
          {"results", results},
          {"preferred", r.preferred ? json(*r.preferred) : json(nullptr)},
          {"odds",
           {{"event", r.odds.event},
            {"posterior_prob", r.odds.posterior_prob},
            {"prior_prob", r.odds.prior_prob},
            {"ratio", number_or_null(r.odds.ratio)},
            {"posterior_se", r.odds.posterior_se},
            {"posterior_upper", r.odds.posterior_upper},
            {"zero_count", r.odds.zero_count}}},
          {"nulls",
           {{"source", r.nulls.source},
            {"available", r.nulls.available},
            {"used", r.nulls.used},
            {"posterior_fraction", r.nulls.posterior_fraction}}},
          {"diagnostics", diagnostics},
          {"config", r.config},
          {"warnings", r.warnings},
          {"wall_clock_seconds", r.wall_clock_seconds}};
}

Report report_from_json(const json& j) {
  if (j.value("format", "") != "relinfo-report/1") {
    throw std::invalid_argument("not a relinfo report (format tag missing or unknown)");
  }
  Report r;
  r.model = j.at("model").get<std::string>();
  for (const auto& e : j.at("results")) {
    ScenarioResult s;
    s.name = e.at("name").get<std::string>();
    if (e.contains("n_new")) s.n_new = e.at("n_new").get<std::size_t>();
    if (e.contains("points")) s.points = e.at("points").get<std::vector<double>>();
    s.result = ri::ri_result_from_json(e.at("result"));
    r.results.push_back(std::move(s));
  }
  if (!j.at("preferred").is_null()) r.preferred = j.at("preferred").get<std::string>();
  const auto& o = j.at("odds");
  r.odds = {o.at("event").get<std::string>(), o.at("posterior_prob").get<double>(),
            o.at("prior_prob").get<double>(),  number_from(o.at("ratio")),
            o.at("posterior_se").get<double>(), o.at("posterior_upper").get<double>(),
            o.at("zero_count").get<bool>()};
  const auto& n = j.at("nulls");
  r.nulls = {n.at("source").get<std::string>(), n.at("available").get<std::size_t>(),
             n.at("used").get<std::size_t>(), n.at("posterior_fraction").get<double>()};
  for (const auto& d : j.at("diagnostics")) {
    ChainDiagnostics c;
    c.label = d.at("label").get<std::string>();
    for (const auto& b : d.at("blocks")) {
      c.blocks.push_back({b.at("name").get<std::string>(), b.at("acceptance_rate").get<double>(),
                          b.at("final_scale").get<double>()});
    }
    c.latent_acceptance = d.at("latent_acceptance").get<double>();
    c.extra_acceptance = d.at("extra_acceptance").get<double>();
    c.summary_names = d.at("ess_order").get<std::vector<std::string>>();
    for (const auto& name : c.summary_names) c.ess.push_back(number_from(d.at("ess").at(name)));
    r.diagnostics.push_back(std::move(c));
  }
  r.config = j.at("config");
  r.warnings = j.at("warnings").get<std::vector<std::string>>();
  r.wall_clock_seconds = j.at("wall_clock_seconds").get<double>();
  return r;
}

std::string render_svg(const Report& r) {
  const int bar = 28;
  const int gap = 36;
  const int left = 60;
  const int top = 40;
  const int plot_h = 260;
  const int group = 2 * bar + gap;
  const int width = left + static_cast<int>(r.results.size()) * group + 40;
  const int height = top + plot_h + 90;
  auto y_of = [&](double v) { return top + plot_h * (1.0 - std::clamp(v, 0.0, 1.0)); };

  std::ostringstream s;
  s << std::fixed << std::setprecision(2);
  s << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << width << "\" height=\"" << height
    << "\" font-family=\"sans-serif\" font-size=\"12\">\n";
  s << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
  s << "<text x=\"" << left << "\" y=\"20\" font-size=\"14\">Relative information of the observed data ("
    << r.model << ")</text>\n";
  for (int t = 0; t <= 4; ++t) {
    const double v = t / 4.0;
    s << "<line x1=\"" << left << "\" x2=\"" << width - 20 << "\" y1=\"" << y_of(v) << "\" y2=\"" << y_of(v)
      << "\" stroke=\"#ddd\"/>\n";
    s << "<text x=\"" << left - 8 << "\" y=\"" << y_of(v) + 4 << "\" text-anchor=\"end\">" << v << "</text>\n";
  }
  for (std::size_t i = 0; i < r.results.size(); ++i) {
    const auto& res = r.results[i].result;
    const double x0 = left + 20 + static_cast<double>(i) * group;
    const struct {
      double value;
      double se;
      const char* colour;
    } bars[2] = {{res.bi3, res.mc_se_bi3, "#3b6ea5"}, {res.bi4, res.mc_se_bi4, "#e39b3a"}};
    for (int k = 0; k < 2; ++k) {
      const double x = x0 + k * bar;
      s << "<rect x=\"" << x << "\" y=\"" << y_of(bars[k].value) << "\" width=\"" << bar - 4 << "\" height=\""
        << y_of(0) - y_of(bars[k].value) << "\" fill=\"" << bars[k].colour << "\"/>\n";
      const double cx = x + (bar - 4) / 2.0;
      const double lo = y_of(bars[k].value - 2 * bars[k].se);
      const double hi = y_of(bars[k].value + 2 * bars[k].se);
      s << "<line x1=\"" << cx << "\" x2=\"" << cx << "\" y1=\"" << lo << "\" y2=\"" << hi
        << "\" stroke=\"black\"/>\n";
      for (double yy : {lo, hi}) {
        s << "<line x1=\"" << cx - 5 << "\" x2=\"" << cx + 5 << "\" y1=\"" << yy << "\" y2=\"" << yy
          << "\" stroke=\"black\"/>\n";
      }
    }
    s << "<text x=\"" << x0 + bar << "\" y=\"" << top + plot_h + 18 << "\" text-anchor=\"middle\">"
      << r.results[i].name << "</text>\n";
  }
  const int ly = top + plot_h + 50;
  s << "<rect x=\"" << left << "\" y=\"" << ly - 10 << "\" width=\"12\" height=\"12\" fill=\"#3b6ea5\"/>"
    << "<text x=\"" << left + 18 << "\" y=\"" << ly << "\">BI3</text>\n";
  s << "<rect x=\"" << left + 70 << "\" y=\"" << ly - 10
    << "\" width=\"12\" height=\"12\" fill=\"#e39b3a\"/><text x=\"" << left + 88 << "\" y=\"" << ly
    << "\">BI4</text>\n";
  s << "<text x=\"" << left + 140 << "\" y=\"" << ly << "\">error bars: +/- 2 Monte Carlo se</text>\n";
  s << "</svg>\n";
  return s.str();
}

std::string summarize(const Report& r) {
  std::ostringstream s;
  s << std::setprecision(4);
  s << "model: " << r.model << "\n";
  for (const auto& e : r.results) {
    s << "  " << e.name << ": BI3 = " << e.result.bi3 << " (se " << e.result.mc_se_bi3 << "), BI4 = "
      << e.result.bi4 << " (se " << e.result.mc_se_bi4 << ")\n";
  }
  if (r.preferred) s << "preferred (smallest BI3): " << *r.preferred << "\n";
  s << r.odds.event << ": posterior " << r.odds.posterior_prob;
  if (r.odds.zero_count) s << " (no draws in the event; at most " << r.odds.posterior_upper << ")";
  s << ", prior " << r.odds.prior_prob << ", ratio " << r.odds.ratio << "\n";
  s << "null draws: " << r.nulls.used << " used of " << r.nulls.available << " (" << r.nulls.source << ")\n";
  for (const auto& w : r.warnings) s << "warning: " << w << "\n";
  return s.str();
}

}  // namespace relinfo
