#include "hetcons/cli.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <optional>

#include <CLI11.hpp>
#include <json.hpp>

#include "hetcons/metrics.hpp"
#include "hetcons/output.hpp"
#include "hetcons/scenario.hpp"

namespace hetcons::cli {
namespace {

using nlohmann::json;

struct Options {
  std::string scenario;
  std::optional<std::uint64_t> seed;
  std::optional<std::string> out;
  std::optional<std::string> svg;
  bool full_state = false;
  int runs = 200;
  std::vector<double> window;
};

json to_json(const Vector& v) { return std::vector<double>(v.data(), v.data() + v.size()); }

json to_json(const Matrix& m) {
  json rows = json::array();
  for (int i = 0; i < m.rows(); ++i) {
    json row = json::array();
    for (int j = 0; j < m.cols(); ++j) row.push_back(m(i, j));
    rows.push_back(row);
  }
  return rows;
}

json to_json(const Spectrum& s) {
  json out = json::array();
  for (const Complex& z : s) out.push_back(json::array({z.real(), z.imag()}));
  return out;
}

json to_json(const A4Report& r) {
  json graphs = json::array();
  for (const GraphStatus& g : r.per_graph) {
    graphs.push_back({{"has_spanning_tree", g.has_spanning_tree}, {"balanced", g.balanced}});
  }
  return {{"passes", r.passes()},
          {"union_has_spanning_tree", r.union_has_spanning_tree},
          {"union_balanced", r.union_balanced},
          {"per_graph", graphs}};
}

json to_json(const RateFit& f) {
  return {{"rate", f.rate},
          {"intercept", f.intercept},
          {"window", json::array({f.t_start, f.t_end})},
          {"r_squared", f.r_squared}};
}

void report_error(std::ostream& err, const std::string& code, const std::string& message,
                  const std::string& path = {}) {
  json e{{"error", code}, {"message", message}};
  if (!path.empty()) e["path"] = path;
  err << e.dump() << "\n";
}

SimScenario load(const Options& o, ScenarioSpec* spec_out = nullptr) {
  ScenarioSpec spec = scenario::load_spec(o.scenario);
  if (o.seed) spec.sim.seed = *o.seed;
  if (spec_out) *spec_out = spec;
  return scenario::build(spec);
}

Matrix spectrum_laplacian(const SimScenario& s) {
  if (s.is_switching()) return switching::mean_laplacian(std::get<MarkovTopology>(s.topology));
  return graph::laplacian(std::get<DiGraph>(s.topology));
}

std::ofstream open_file(const std::string& path) {
  std::ofstream f(path, std::ios::binary);
  if (!f) throw Error(ErrorCode::ValidationError, "cannot write '" + path + "'", path);
  return f;
}

template <typename Writer>
void emit(const std::optional<std::string>& path, std::ostream& fallback, Writer&& writer) {
  if (path) {
    std::ofstream f = open_file(*path);
    writer(f);
  } else {
    writer(fallback);
  }
}

int cmd_synthesize(const Options& o, std::ostream& out) {
  const SimScenario s = load(o);
  json doc;
  doc["r"] = s.cs.r;
  doc["b"] = to_json(s.cs.b);
  doc["nu"] = to_json(s.cs.nu);
  doc["rank"] = s.gain.rank == GainRank::One ? "one" : "full";
  doc["mu"] = s.gain.mu;
  if (s.gain.q1) doc["q1"] = *s.gain.q1;
  doc["r_hat"] = s.gain.r_hat;
  doc["K"] = to_json(Vector(s.gain.K.transpose()));
  doc["P1"] = to_json(s.gain.P1);
  json controllers = json::array();
  for (const LocalController& lc : s.controllers) {
    json c = {{"agent", lc.agent_id},
              {"r", lc.agent_r},
              {"static", lc.is_static()},
              {"D", to_json(lc.D)},
              {"E", to_json(lc.E)},
              {"G", to_json(lc.G)}};
    if (lc.is_static()) c["F"] = to_json(Vector(lc.F.transpose()));
    controllers.push_back(std::move(c));
  }
  doc["controllers"] = controllers;
  if (s.observer) {
    doc["observer"] = {{"C", to_json(Vector(s.observer->C.transpose()))},
                       {"M", to_json(s.observer->M)}};
  }
  const ClosedLoopSpectrum spec =
      synthesis::closed_loop_spectrum(s.cs, s.gain, spectrum_laplacian(s));
  doc["laplacian"] = s.is_switching() ? "stationary_mean" : "fixed";
  doc["spectrum"] = to_json(spec.values);
  doc["spectrum_consistent"] = spec.consistent;
  if (s.is_switching()) {
    const MarkovTopology& mt = std::get<MarkovTopology>(s.topology);
    const A4Report a4 = switching::check_A4(mt);
    doc["pi"] = to_json(mt.pi);
    doc["a4"] = to_json(a4);
    if (a4.passes() && s.gain.rank == GainRank::One) {
      doc["speed_bound"] = switching::speed_bound(mt, s.gain, s.cs);
    }
  } else if (s.gain.rank == GainRank::One) {
    const Matrix l = graph::laplacian(std::get<DiGraph>(s.topology));
    if (graph::has_spanning_tree(std::get<DiGraph>(s.topology))) {
      doc["theoretical_speed"] = metrics::theoretical_speed_fixed(s.cs, s.gain, l).speed;
    }
  }
  out << doc.dump(2) << "\n";
  return kOk;
}

int cmd_simulate(const Options& o, bool switching, std::ostream& out, std::ostream& err) {
  ScenarioSpec spec;
  const SimScenario s = load(o, &spec);
  if (s.is_switching() != switching) {
    throw Error(ErrorCode::ValidationError,
                switching ? "scenario has a fixed graph; use simulate"
                          : "scenario has a switching topology; use simulate-switching",
                switching ? "switching" : "graph");
  }
  const std::optional<std::string> csv = o.out ? o.out : spec.output.csv;
  const std::optional<std::string> svg = o.svg ? o.svg : spec.output.svg;
  const bool full_state = o.full_state || spec.output.full_state;
  const auto write_all = [&](const Trajectory& traj) {
    emit(csv, out, [&](std::ostream& os) { output::write_trajectory_csv(os, traj, full_state); });
    if (svg) {
      std::ofstream f = open_file(*svg);
      output::write_trajectory_svg(f, traj);
    }
  };
  try {
    write_all(sim::simulate(s));
  } catch (const SimulationError& e) {
    write_all(e.partial());
    report_error(err, std::string(to_string(e.code())), e.what(), e.path());
    return kNumericFailure;
  }
  return kOk;
}

int cmd_montecarlo(const Options& o, std::ostream& out, std::ostream& err) {
  ScenarioSpec spec;
  const SimScenario s = load(o, &spec);
  if (!s.is_switching()) {
    throw Error(ErrorCode::ValidationError, "montecarlo needs a switching topology", "switching");
  }
  const MonteCarloResult mc = sim::monte_carlo_ms(s, o.runs);
  if (mc.failed > 0) {
    err << json{{"warning", "runs excluded"}, {"failed_runs", mc.failed}}.dump() << "\n";
  }
  const std::optional<std::string> csv = o.out ? o.out : spec.output.csv;
  emit(csv, out, [&](std::ostream& os) { output::write_montecarlo_csv(os, mc); });
  if (o.svg || spec.output.svg) {
    std::ofstream f = open_file(o.svg ? *o.svg : *spec.output.svg);
    output::write_svg(f, mc.times, {mc.mean_square}, "mean-square disagreement");
  }
  return kOk;
}

RateFit fit(const Options& o, const std::vector<double>& t, const std::vector<double>& v) {
  if (o.window.empty()) return metrics::empirical_rate(t, v);
  return metrics::empirical_rate(t, v, o.window[0], o.window[1]);
}

int cmd_analyze(const Options& o, std::ostream& out, std::ostream& err) {
  const SimScenario s = load(o);
  json doc;
  json warnings = json::array();
  const ClosedLoopSpectrum spec =
      synthesis::closed_loop_spectrum(s.cs, s.gain, spectrum_laplacian(s));
  doc["spectrum"] = to_json(spec.values);
  if (!s.is_switching()) {
    doc["topology"] = "fixed";
    const Trajectory traj = sim::simulate(s);
    const std::vector<double> d = metrics::disagreement(traj);
    doc["disagreement_final"] = d.back();
    doc["empirical_rate"] = to_json(fit(o, traj.times, d));
    const DiGraph& g = std::get<DiGraph>(s.topology);
    if (s.gain.rank == GainRank::One && graph::has_spanning_tree(g)) {
      const FixedSpeed speed = metrics::theoretical_speed_fixed(s.cs, s.gain, graph::laplacian(g));
      doc["theoretical_speed"] = speed.speed;
      doc["theoretical_speed_terms"] = {{"coupling", speed.coupling_term},
                                        {"target", speed.target_term},
                                        {"target_alternate", speed.target_term_alternate}};
      if (speed.warning) warnings.push_back(*speed.warning);
    } else {
      doc["theoretical_speed"] = nullptr;
      warnings.push_back(graph::has_spanning_tree(g)
                             ? "theoretical speed needs a rank-one gain"
                             : "graph has no spanning tree; consensus is not guaranteed");
    }
    if (s.observer) {
      double worst = 0.0;
      for (const AgentSeries& a : traj.agents) worst = std::max(worst, a.observer_error.back());
      doc["observer_error_final"] = worst;
    }
  } else {
    doc["topology"] = "switching";
    const MarkovTopology& mt = std::get<MarkovTopology>(s.topology);
    const A4Report a4 = switching::check_A4(mt);
    doc["a4"] = to_json(a4);
    const MonteCarloResult mc = sim::monte_carlo_ms(s, o.runs);
    doc["runs"] = mc.runs;
    doc["failed_runs"] = mc.failed;
    doc["mean_square_initial"] = mc.mean_square.front();
    doc["mean_square_final"] = mc.mean_square.back();
    doc["disagreement_final"] = std::sqrt(mc.mean_square.back());
    doc["empirical_rate"] = to_json(fit(o, mc.times, mc.mean_square));
    if (a4.passes() && s.gain.rank == GainRank::One) {
      doc["theoretical_speed"] = metrics::theoretical_speed_switching(mt, s.gain, s.cs);
    } else {
      doc["theoretical_speed"] = nullptr;
      warnings.push_back(a4.passes() ? "speed bound needs a rank-one gain"
                                     : "union graph violates A4; no speed bound");
    }
  }
  doc["warnings"] = warnings;
  for (const auto& w : warnings) err << json{{"warning", w}}.dump() << "\n";
  out << doc.dump(2) << "\n";
  return kOk;
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Minimum-rank dynamic output consensus toolkit", "hetcons"};
  app.require_subcommand(1);
  Options o;
  const auto add_common = [&](CLI::App* sub) {
    sub->add_option("scenario", o.scenario, "scenario JSON file")->required();
    sub->add_option("--seed", o.seed, "override sim.seed");
  };
  CLI::App* synth = app.add_subcommand("synthesize", "print gains and closed-loop spectrum");
  add_common(synth);
  CLI::App* simulate = app.add_subcommand("simulate", "simulate a fixed topology");
  CLI::App* simulate_sw =
      app.add_subcommand("simulate-switching", "simulate one switching realization");
  for (CLI::App* sub : {simulate, simulate_sw}) {
    add_common(sub);
    sub->add_option("--out", o.out, "CSV output path (default: output.csv or stdout)");
    sub->add_option("--svg", o.svg, "SVG plot path");
    sub->add_flag("--full-state", o.full_state, "append full state columns");
  }
  CLI::App* mc = app.add_subcommand("montecarlo", "mean-square disagreement over many runs");
  add_common(mc);
  mc->add_option("--runs", o.runs, "number of runs")->check(CLI::Range(1, 1000000));
  mc->add_option("--out", o.out, "CSV output path");
  mc->add_option("--svg", o.svg, "SVG plot path");
  CLI::App* analyze = app.add_subcommand("analyze", "rates and speeds as JSON");
  add_common(analyze);
  analyze->add_option("--runs", o.runs, "Monte Carlo runs for switching scenarios")
      ->check(CLI::Range(1, 1000000));
  analyze->add_option("--window", o.window, "fit window START END (seconds)")
      ->expected(2);

  std::vector<std::string> reversed(args.rbegin(), args.rend());
  try {
    app.parse(reversed);
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return kOk;
  } catch (const CLI::ParseError& e) {
    report_error(err, "UsageError", e.what());
    return kValidationFailure;
  }

  try {
    if (!o.window.empty() && !(o.window[1] > o.window[0])) {
      throw Error(ErrorCode::ValidationError, "--window END must exceed START", "--window");
    }
    if (synth->parsed()) return cmd_synthesize(o, out);
    if (simulate->parsed()) return cmd_simulate(o, false, out, err);
    if (simulate_sw->parsed()) return cmd_simulate(o, true, out, err);
    if (mc->parsed()) return cmd_montecarlo(o, out, err);
    return cmd_analyze(o, out, err);
  } catch (const Error& e) {
    report_error(err, std::string(to_string(e.code())), e.what(), e.path());
    return is_numeric_failure(e.code()) ? kNumericFailure : kValidationFailure;
  } catch (const std::exception& e) {
    report_error(err, "InternalError", e.what());
    return kNumericFailure;
  }
}

}  // namespace hetcons::cli
