#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "hetcons/agents.hpp"
#include "hetcons/graph.hpp"
#include "hetcons/sim.hpp"

namespace hetcons {

/// Declarative scenario as written in JSON. build() turns it into a
/// SimScenario with all synthesis done.
struct AgentSpec {
  /// Builtin name, or empty for a custom polynomial agent.
  std::string builtin;
  int r = 0;
  int n_eta = 0;
  Polynomial alpha;
  Polynomial beta;
  std::vector<Polynomial> theta;
  /// Initial states; optional overrides for builtin agents.
  std::optional<std::vector<double>> xi0;
  std::optional<std::vector<double>> eta0;

  friend bool operator==(const AgentSpec&, const AgentSpec&) = default;
};

struct ControllerSpec {
  std::vector<Complex> poles;
  double mu = 1.0;
  double q1 = 1.0;
  double r_hat = 1.0;
  GainRank rank = GainRank::One;
  /// Full-rank weight; defaults to q1 I.
  std::optional<std::vector<std::vector<double>>> Q1;

  friend bool operator==(const ControllerSpec&, const ControllerSpec&) = default;
};

struct GraphSpec {
  int n = 0;
  std::vector<Edge> edges;

  friend bool operator==(const GraphSpec&, const GraphSpec&) = default;
};

struct SwitchingSpec {
  std::vector<GraphSpec> graphs;
  std::vector<std::vector<double>> generator;

  friend bool operator==(const SwitchingSpec&, const SwitchingSpec&) = default;
};

struct ObserverSpec {
  std::vector<double> C;
  std::vector<Complex> poles;

  friend bool operator==(const ObserverSpec&, const ObserverSpec&) = default;
};

enum class InitMode { Explicit, Random };

struct SimSpec {
  double t_end = 30.0;
  double dt = 1e-3;
  std::uint64_t seed = 0;
  InitMode init = InitMode::Explicit;

  friend bool operator==(const SimSpec&, const SimSpec&) = default;
};

struct OutputSpec {
  std::optional<std::string> csv;
  std::optional<std::string> svg;
  bool full_state = false;

  friend bool operator==(const OutputSpec&, const OutputSpec&) = default;
};

struct ScenarioSpec {
  std::vector<AgentSpec> agents;
  ControllerSpec controller;
  std::optional<GraphSpec> graph;
  std::optional<SwitchingSpec> switching;
  std::optional<ObserverSpec> observer;
  SimSpec sim;
  OutputSpec output;

  friend bool operator==(const ScenarioSpec&, const ScenarioSpec&) = default;
};

/// Upper limit on the number of integration steps in a scenario file.
inline constexpr double kMaxSteps = 1e7;

namespace scenario {

/// Throws ParseError ("line L, column C") on malformed JSON and
/// ValidationError (field path) on schema violations.
ScenarioSpec parse(std::string_view json_text);
ScenarioSpec load_spec(const std::string& path);

/// Serializes to JSON; parse(write(s)) == s.
std::string write(const ScenarioSpec& spec);

/// Validates and runs all synthesis steps. Synthesis errors keep their own
/// code and carry the offending field path.
SimScenario build(const ScenarioSpec& spec);

SimScenario load(const std::string& path);

DiGraph to_graph(const GraphSpec& g);
MarkovTopology to_topology(const SwitchingSpec& s);

}  // namespace scenario
}  // namespace hetcons
