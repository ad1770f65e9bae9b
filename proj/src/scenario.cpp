#include "hetcons/scenario.hpp"

#include <cmath>
#include <fstream>
#include <functional>
#include <initializer_list>
#include <limits>
#include <set>
#include <sstream>

#include <json.hpp>

#include "hetcons/synthesis.hpp"

namespace hetcons::scenario {
namespace {

using nlohmann::json;

[[noreturn]] void invalid(const std::string& path, const std::string& reason) {
  throw Error(ErrorCode::ValidationError, path + ": " + reason, path);
}

std::string join(const std::string& path, const std::string& key) {
  return path.empty() ? key : path + "." + key;
}

std::string index(const std::string& path, std::size_t i) {
  return path + "[" + std::to_string(i) + "]";
}

void require_object(const json& j, const std::string& path,
                    std::initializer_list<const char*> allowed) {
  if (!j.is_object()) invalid(path.empty() ? "<root>" : path, "expected an object");
  const std::set<std::string> keys(allowed.begin(), allowed.end());
  for (const auto& item : j.items()) {
    if (!keys.count(item.key())) invalid(join(path, item.key()), "unknown field");
  }
}

const json& member(const json& j, const std::string& path, const char* key) {
  if (!j.contains(key)) invalid(join(path, key), "required field is missing");
  return j.at(key);
}

double number(const json& j, const std::string& path) {
  if (!j.is_number()) invalid(path, "expected a number");
  const double v = j.get<double>();
  if (!std::isfinite(v)) invalid(path, "must be finite");
  return v;
}

double positive(const json& j, const std::string& path) {
  const double v = number(j, path);
  if (!(v > 0.0)) invalid(path, "must be > 0");
  return v;
}

long long integer(const json& j, const std::string& path) {
  if (!j.is_number_integer()) invalid(path, "expected an integer");
  return j.get<long long>();
}

int small_int(const json& j, const std::string& path, int lo, int hi) {
  const long long v = integer(j, path);
  if (v < lo || v > hi) {
    invalid(path, "must lie in " + std::to_string(lo) + ".." + std::to_string(hi));
  }
  return static_cast<int>(v);
}

std::vector<double> numbers(const json& j, const std::string& path) {
  if (!j.is_array()) invalid(path, "expected an array of numbers");
  std::vector<double> out;
  for (std::size_t i = 0; i < j.size(); ++i) out.push_back(number(j[i], index(path, i)));
  return out;
}

std::vector<std::vector<double>> matrix(const json& j, const std::string& path) {
  if (!j.is_array() || j.empty()) invalid(path, "expected a nonempty array of rows");
  std::vector<std::vector<double>> out;
  for (std::size_t i = 0; i < j.size(); ++i) {
    out.push_back(numbers(j[i], index(path, i)));
    if (out.back().size() != j.size()) invalid(index(path, i), "matrix must be square");
  }
  return out;
}

std::vector<Complex> poles(const json& j, const std::string& path) {
  if (!j.is_array() || j.empty()) invalid(path, "expected a nonempty array of poles");
  std::vector<Complex> out;
  for (std::size_t i = 0; i < j.size(); ++i) {
    const std::string p = index(path, i);
    if (j[i].is_array()) {
      if (j[i].size() != 2) invalid(p, "complex pole must be [re, im]");
      out.emplace_back(number(j[i][0], index(p, 0)), number(j[i][1], index(p, 1)));
    } else {
      out.emplace_back(number(j[i], p), 0.0);
    }
  }
  return out;
}

Polynomial polynomial(const json& j, const std::string& path, int vars) {
  if (!j.is_array()) invalid(path, "expected an array of terms");
  Polynomial out;
  for (std::size_t i = 0; i < j.size(); ++i) {
    const std::string p = index(path, i);
    require_object(j[i], p, {"c", "e"});
    PolyTerm t;
    t.c = number(member(j[i], p, "c"), join(p, "c"));
    const json& e = member(j[i], p, "e");
    const std::string ep = join(p, "e");
    if (!e.is_array() || static_cast<int>(e.size()) != vars) {
      invalid(ep, "expected " + std::to_string(vars) + " exponents (r + n_eta)");
    }
    for (std::size_t k = 0; k < e.size(); ++k) t.e.push_back(small_int(e[k], index(ep, k), 0, 64));
    out.push_back(std::move(t));
  }
  return out;
}

AgentSpec agent(const json& j, const std::string& path) {
  AgentSpec a;
  if (j.is_object() && j.contains("builtin")) {
    require_object(j, path, {"builtin", "xi0", "eta0"});
    const json& name = j.at("builtin");
    if (!name.is_string()) invalid(join(path, "builtin"), "expected a string");
    a.builtin = name.get<std::string>();
    const auto names = agents::builtin_names();
    if (std::find(names.begin(), names.end(), a.builtin) == names.end()) {
      invalid(join(path, "builtin"), "unknown builtin agent '" + a.builtin + "'");
    }
    const NormalFormAgent ref = agents::builtin(a.builtin);
    if (j.contains("xi0")) {
      a.xi0 = numbers(j.at("xi0"), join(path, "xi0"));
      if (static_cast<int>(a.xi0->size()) != ref.r) invalid(join(path, "xi0"), "length must be r");
    }
    if (j.contains("eta0")) {
      a.eta0 = numbers(j.at("eta0"), join(path, "eta0"));
      if (static_cast<int>(a.eta0->size()) != ref.n_eta) {
        invalid(join(path, "eta0"), "length must be n_eta");
      }
    }
    return a;
  }
  require_object(j, path, {"custom"});
  const std::string cp = join(path, "custom");
  const json& c = member(j, path, "custom");
  require_object(c, cp, {"r", "n_eta", "alpha", "beta", "theta", "xi0", "eta0"});
  a.r = small_int(member(c, cp, "r"), join(cp, "r"), 1, 32);
  a.n_eta = small_int(member(c, cp, "n_eta"), join(cp, "n_eta"), 0, 32);
  const int vars = a.r + a.n_eta;
  a.alpha = polynomial(member(c, cp, "alpha"), join(cp, "alpha"), vars);
  a.beta = polynomial(member(c, cp, "beta"), join(cp, "beta"), vars);
  const std::string tp = join(cp, "theta");
  const json& theta = c.contains("theta") ? c.at("theta") : json::array();
  if (!theta.is_array() || static_cast<int>(theta.size()) != a.n_eta) {
    invalid(tp, "expected n_eta arrays of terms");
  }
  for (std::size_t k = 0; k < theta.size(); ++k) {
    a.theta.push_back(polynomial(theta[k], index(tp, k), vars));
  }
  if (c.contains("xi0")) {
    a.xi0 = numbers(c.at("xi0"), join(cp, "xi0"));
    if (static_cast<int>(a.xi0->size()) != a.r) invalid(join(cp, "xi0"), "length must be r");
  }
  if (c.contains("eta0")) {
    a.eta0 = numbers(c.at("eta0"), join(cp, "eta0"));
    if (static_cast<int>(a.eta0->size()) != a.n_eta) {
      invalid(join(cp, "eta0"), "length must be n_eta");
    }
  }
  return a;
}

GraphSpec graph_spec(const json& j, const std::string& path) {
  require_object(j, path, {"n", "edges"});
  GraphSpec g;
  g.n = small_int(member(j, path, "n"), join(path, "n"), 1, 64);
  const std::string ep = join(path, "edges");
  const json& edges = j.contains("edges") ? j.at("edges") : json::array();
  if (!edges.is_array()) invalid(ep, "expected an array of [from, to, w]");
  std::set<std::pair<int, int>> seen;
  for (std::size_t i = 0; i < edges.size(); ++i) {
    const std::string p = index(ep, i);
    const json& e = edges[i];
    if (!e.is_array() || e.size() < 2 || e.size() > 3) invalid(p, "expected [from, to, w]");
    Edge edge;
    edge.from = small_int(e[0], index(p, 0), 1, g.n);
    edge.to = small_int(e[1], index(p, 1), 1, g.n);
    edge.weight = e.size() == 3 ? positive(e[2], index(p, 2)) : 1.0;
    if (edge.from == edge.to) invalid(p, "self-loops are not allowed");
    if (!seen.insert({edge.from, edge.to}).second) invalid(p, "duplicate edge");
    g.edges.push_back(edge);
  }
  return g;
}

ControllerSpec controller(const json& j, const std::string& path) {
  require_object(j, path, {"poles", "mu", "q1", "r_hat", "rank", "Q1"});
  ControllerSpec c;
  c.poles = poles(member(j, path, "poles"), join(path, "poles"));
  if (c.poles.size() > 31) invalid(join(path, "poles"), "at most 31 poles");
  if (j.contains("mu")) c.mu = positive(j.at("mu"), join(path, "mu"));
  if (j.contains("q1")) c.q1 = positive(j.at("q1"), join(path, "q1"));
  if (j.contains("r_hat")) c.r_hat = positive(j.at("r_hat"), join(path, "r_hat"));
  if (j.contains("rank")) {
    const json& rank = j.at("rank");
    if (rank == "one") {
      c.rank = GainRank::One;
    } else if (rank == "full") {
      c.rank = GainRank::Full;
    } else {
      invalid(join(path, "rank"), "expected \"one\" or \"full\"");
    }
  }
  if (j.contains("Q1")) {
    c.Q1 = matrix(j.at("Q1"), join(path, "Q1"));
    if (c.Q1->size() != c.poles.size() + 1) {
      invalid(join(path, "Q1"), "must be r x r with r = number of poles + 1");
    }
    if (c.rank != GainRank::Full) invalid(join(path, "Q1"), "only used with rank \"full\"");
  }
  return c;
}

SwitchingSpec switching_spec(const json& j, const std::string& path) {
  require_object(j, path, {"graphs", "generator"});
  SwitchingSpec s;
  const std::string gp = join(path, "graphs");
  const json& graphs = member(j, path, "graphs");
  if (!graphs.is_array() || graphs.empty()) invalid(gp, "expected a nonempty array of graphs");
  for (std::size_t i = 0; i < graphs.size(); ++i) {
    s.graphs.push_back(graph_spec(graphs[i], index(gp, i)));
    if (s.graphs.back().n != s.graphs.front().n) {
      invalid(join(index(gp, i), "n"), "all graphs must share the node count");
    }
  }
  s.generator = matrix(member(j, path, "generator"), join(path, "generator"));
  if (s.generator.size() != s.graphs.size()) {
    invalid(join(path, "generator"), "must be l x l with l = number of graphs");
  }
  return s;
}

ObserverSpec observer(const json& j, const std::string& path) {
  require_object(j, path, {"C", "poles"});
  ObserverSpec o;
  o.C = numbers(member(j, path, "C"), join(path, "C"));
  o.poles = poles(member(j, path, "poles"), join(path, "poles"));
  return o;
}

SimSpec sim_spec(const json& j, const std::string& path) {
  require_object(j, path, {"t_end", "dt", "seed", "init"});
  SimSpec s;
  if (j.contains("t_end")) s.t_end = positive(j.at("t_end"), join(path, "t_end"));
  if (j.contains("dt")) s.dt = positive(j.at("dt"), join(path, "dt"));
  if (s.t_end < s.dt) invalid(join(path, "t_end"), "must be >= dt");
  if (s.t_end / s.dt > kMaxSteps) invalid(join(path, "dt"), "t_end / dt exceeds 1e7 steps");
  if (j.contains("seed")) {
    const json& seed = j.at("seed");
    if (!seed.is_number_unsigned()) invalid(join(path, "seed"), "expected a nonnegative integer");
    s.seed = seed.get<std::uint64_t>();
  }
  if (j.contains("init")) {
    const json& init = j.at("init");
    if (init == "explicit") {
      s.init = InitMode::Explicit;
    } else if (init == "random") {
      s.init = InitMode::Random;
    } else {
      invalid(join(path, "init"), "expected \"explicit\" or \"random\"");
    }
  }
  return s;
}

OutputSpec output_spec(const json& j, const std::string& path) {
  require_object(j, path, {"csv", "svg", "full_state"});
  OutputSpec o;
  for (const char* key : {"csv", "svg"}) {
    if (!j.contains(key)) continue;
    if (!j.at(key).is_string()) invalid(join(path, key), "expected a path string");
    (std::string(key) == "csv" ? o.csv : o.svg) = j.at(key).get<std::string>();
  }
  if (j.contains("full_state")) {
    if (!j.at("full_state").is_boolean()) invalid(join(path, "full_state"), "expected a boolean");
    o.full_state = j.at("full_state").get<bool>();
  }
  return o;
}

json complex_list(const std::vector<Complex>& values) {
  json out = json::array();
  for (const Complex& z : values) {
    if (z.imag() == 0.0) {
      out.push_back(z.real());
    } else {
      out.push_back(json::array({z.real(), z.imag()}));
    }
  }
  return out;
}

json polynomial_json(const Polynomial& p) {
  json out = json::array();
  for (const PolyTerm& t : p) out.push_back({{"c", t.c}, {"e", t.e}});
  return out;
}

json graph_json(const GraphSpec& g) {
  json edges = json::array();
  for (const Edge& e : g.edges) edges.push_back(json::array({e.from, e.to, e.weight}));
  return {{"n", g.n}, {"edges", edges}};
}

std::pair<int, int> line_column(std::string_view text, std::size_t byte) {
  int line = 1, column = 1;
  for (std::size_t k = 0; k + 1 < byte && k < text.size(); ++k) {
    if (text[k] == '\n') {
      ++line;
      column = 1;
    } else {
      ++column;
    }
  }
  return {line, column};
}

// Runs a synthesis step, attaching the field path to any error it raises.
template <typename F>
auto at_path(const std::string& path, F&& f) -> decltype(f()) {
  try {
    return f();
  } catch (const Error& e) {
    if (!e.path().empty()) throw;
    throw Error(e.code(), path + ": " + e.what(), path);
  }
}

Vector to_vector(const std::vector<double>& v) {
  return Eigen::Map<const Vector>(v.data(), static_cast<Eigen::Index>(v.size()));
}

Matrix to_matrix(const std::vector<std::vector<double>>& rows) {
  Matrix m(rows.size(), rows.empty() ? 0 : rows.front().size());
  for (std::size_t i = 0; i < rows.size(); ++i) {
    for (std::size_t j = 0; j < rows[i].size(); ++j) m(i, j) = rows[i][j];
  }
  return m;
}

}  // namespace

ScenarioSpec parse(std::string_view text) {
  json doc;
  try {
    doc = json::parse(text.begin(), text.end());
  } catch (const json::parse_error& e) {
    const auto [line, column] = line_column(text, e.byte);
    const std::string where =
        "line " + std::to_string(line) + ", column " + std::to_string(column);
    throw Error(ErrorCode::ParseError, "invalid JSON at " + where, where);
  }
  require_object(doc, "", {"agents", "controller", "graph", "switching", "observer", "sim",
                           "output"});
  ScenarioSpec s;
  const json& agents = member(doc, "", "agents");
  if (!agents.is_array() || agents.empty()) invalid("agents", "expected a nonempty array");
  if (agents.size() > 64) invalid("agents", "at most 64 agents");
  for (std::size_t i = 0; i < agents.size(); ++i) {
    s.agents.push_back(agent(agents[i], index("agents", i)));
  }
  s.controller = controller(member(doc, "", "controller"), "controller");
  const bool has_graph = doc.contains("graph");
  const bool has_switching = doc.contains("switching");
  if (has_graph == has_switching) {
    invalid(has_graph ? "switching" : "graph",
            "exactly one of \"graph\" and \"switching\" must be present");
  }
  if (has_graph) {
    s.graph = graph_spec(doc.at("graph"), "graph");
    if (s.graph->n != static_cast<int>(s.agents.size())) {
      invalid("graph.n", "must equal the number of agents");
    }
  } else {
    s.switching = switching_spec(doc.at("switching"), "switching");
    if (s.switching->graphs.front().n != static_cast<int>(s.agents.size())) {
      invalid("switching.graphs[0].n", "must equal the number of agents");
    }
  }
  if (doc.contains("observer")) s.observer = observer(doc.at("observer"), "observer");
  if (doc.contains("sim")) s.sim = sim_spec(doc.at("sim"), "sim");
  if (doc.contains("output")) s.output = output_spec(doc.at("output"), "output");
  return s;
}

ScenarioSpec load_spec(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::ValidationError, "cannot read scenario file '" + path + "'", path);
  std::ostringstream buffer;
  buffer << in.rdbuf();
  return parse(buffer.str());
}

std::string write(const ScenarioSpec& s) {
  json doc;
  json agents = json::array();
  for (const AgentSpec& a : s.agents) {
    json entry;
    if (!a.builtin.empty()) {
      entry["builtin"] = a.builtin;
      if (a.xi0) entry["xi0"] = *a.xi0;
      if (a.eta0) entry["eta0"] = *a.eta0;
    } else {
      json c{{"r", a.r}, {"n_eta", a.n_eta}, {"alpha", polynomial_json(a.alpha)},
             {"beta", polynomial_json(a.beta)}};
      json theta = json::array();
      for (const Polynomial& p : a.theta) theta.push_back(polynomial_json(p));
      c["theta"] = theta;
      if (a.xi0) c["xi0"] = *a.xi0;
      if (a.eta0) c["eta0"] = *a.eta0;
      entry["custom"] = c;
    }
    agents.push_back(entry);
  }
  doc["agents"] = agents;
  json c{{"poles", complex_list(s.controller.poles)},
         {"mu", s.controller.mu},
         {"q1", s.controller.q1},
         {"r_hat", s.controller.r_hat},
         {"rank", s.controller.rank == GainRank::One ? "one" : "full"}};
  if (s.controller.Q1) c["Q1"] = *s.controller.Q1;
  doc["controller"] = c;
  if (s.graph) doc["graph"] = graph_json(*s.graph);
  if (s.switching) {
    json graphs = json::array();
    for (const GraphSpec& g : s.switching->graphs) graphs.push_back(graph_json(g));
    doc["switching"] = {{"graphs", graphs}, {"generator", s.switching->generator}};
  }
  if (s.observer) {
    doc["observer"] = {{"C", s.observer->C}, {"poles", complex_list(s.observer->poles)}};
  }
  doc["sim"] = {{"t_end", s.sim.t_end},
                {"dt", s.sim.dt},
                {"seed", s.sim.seed},
                {"init", s.sim.init == InitMode::Random ? "random" : "explicit"}};
  json out{{"full_state", s.output.full_state}};
  if (s.output.csv) out["csv"] = *s.output.csv;
  if (s.output.svg) out["svg"] = *s.output.svg;
  doc["output"] = out;
  return doc.dump(2) + "\n";
}

DiGraph to_graph(const GraphSpec& g) { return DiGraph::from_edges(g.n, g.edges); }

MarkovTopology to_topology(const SwitchingSpec& s) {
  std::vector<DiGraph> graphs;
  for (const GraphSpec& g : s.graphs) graphs.push_back(to_graph(g));
  return switching::make_topology(std::move(graphs), to_matrix(s.generator));
}

SimScenario build(const ScenarioSpec& spec) {
  SimScenario s;
  for (std::size_t i = 0; i < spec.agents.size(); ++i) {
    const AgentSpec& a = spec.agents[i];
    const std::string path = index("agents", i);
    NormalFormAgent agent = at_path(path, [&] {
      if (!a.builtin.empty()) return agents::builtin(a.builtin);
      return agents::polynomial_agent(
          a.r, a.n_eta, a.alpha, a.beta, a.theta,
          a.xi0 ? to_vector(*a.xi0) : Vector(Vector::Zero(a.r)),
          a.eta0 ? to_vector(*a.eta0) : Vector(Vector::Zero(a.n_eta)));
    });
    if (a.xi0) agent.xi0 = to_vector(*a.xi0);
    if (a.eta0) agent.eta0 = to_vector(*a.eta0);
    agent.id = static_cast<int>(i) + 1;
    s.agents.push_back(std::move(agent));
  }
  if (spec.sim.init == InitMode::Random) sim::randomize_initial_states(s.agents, spec.sim.seed);

  const ControllerSpec& c = spec.controller;
  s.cs = at_path("controller.poles", [&] { return synthesis::design_companion(c.poles); });
  s.gain = at_path("controller", [&] {
    if (c.rank == GainRank::One) return synthesis::rank_one_gain(s.cs, c.mu, c.q1, c.r_hat);
    const Matrix q1 = c.Q1 ? to_matrix(*c.Q1) : Matrix(c.q1 * Matrix::Identity(s.cs.r, s.cs.r));
    return synthesis::full_gain(s.cs, c.mu, q1, c.r_hat);
  });
  for (std::size_t i = 0; i < s.agents.size(); ++i) {
    s.controllers.push_back(at_path(index("agents", i), [&] {
      return synthesis::local_controller(s.cs, s.agents[i]);
    }));
  }
  if (spec.graph) {
    s.topology = at_path("graph", [&] { return to_graph(*spec.graph); });
  } else {
    s.topology = at_path("switching", [&] { return to_topology(*spec.switching); });
  }
  if (spec.observer) {
    const ObserverSpec& o = *spec.observer;
    if (static_cast<int>(o.C.size()) != s.cs.r) invalid("observer.C", "length must be r");
    s.observer = at_path("observer", [&] {
      const RowVector C = to_vector(o.C).transpose();
      return synthesis::observer_gain(s.cs, C, o.poles);
    });
  }
  s.t_end = spec.sim.t_end;
  s.dt = spec.sim.dt;
  s.seed = spec.sim.seed;
  sim::validate(s);
  return s;
}

SimScenario load(const std::string& path) { return build(load_spec(path)); }

}  // namespace hetcons::scenario
