#pragma once

#include <cstdint>
#include <memory>
#include <optional>
#include <string>
#include <variant>
#include <vector>

#include "hetcons/agents.hpp"
#include "hetcons/graph.hpp"
#include "hetcons/switching.hpp"
#include "hetcons/synthesis.hpp"

namespace hetcons {

using Topology = std::variant<DiGraph, MarkovTopology>;

/// Everything needed to integrate one closed loop. Controller states start
/// at zero; observer states start at `observer_init` (zero when empty).
struct SimScenario {
  std::vector<NormalFormAgent> agents;
  CompanionSystem cs;
  ConsensusGain gain;
  std::vector<LocalController> controllers;
  Topology topology = DiGraph(1);
  std::optional<ObserverGain> observer;
  std::vector<Vector> observer_init;
  double t_end = 30.0;
  double dt = 1e-3;
  std::uint64_t seed = 0;
  /// Runs switching simulations even when A4 fails.
  bool override_a4 = false;

  bool is_switching() const { return std::holds_alternative<MarkovTopology>(topology); }
  int size() const { return static_cast<int>(agents.size()); }
};

/// Sampled series of one agent. Row k of each matrix is sample k.
struct AgentSeries {
  std::vector<double> y;
  Matrix xi_hat;
  Matrix eta;
  std::vector<double> u;
  /// |xi_hat - xi_check| per sample; empty without an observer.
  std::vector<double> observer_error;
};

struct Trajectory {
  std::vector<double> times;
  std::vector<AgentSeries> agents;
  /// Switching runs only.
  std::vector<ModeInterval> mode_path;
  /// Mode used for the step starting at each sample (0-based).
  std::vector<int> modes;
  bool diverged = false;

  int samples() const { return static_cast<int>(times.size()); }
};

/// Raised when integration aborts; carries the trajectory up to the last
/// completed step.
class SimulationError : public Error {
 public:
  SimulationError(const Error& cause, std::shared_ptr<const Trajectory> partial)
      : Error(cause.code(), cause.what(), cause.path()), partial_(std::move(partial)) {}

  const Trajectory& partial() const { return *partial_; }

 private:
  std::shared_ptr<const Trajectory> partial_;
};

struct MonteCarloResult {
  std::vector<double> times;
  /// Mean over runs of max_ij |xi_hat_i - xi_hat_j|^2.
  std::vector<double> mean_square;
  int runs = 0;
  /// Runs that aborted and were excluded from the mean.
  int failed = 0;
};

/// Divergence guard on the largest state magnitude.
inline constexpr double kDivergenceBound = 1e6;

namespace sim {

/// Builds local controllers and checks sizes. Throws InvalidDimension on
/// inconsistent input.
void prepare(SimScenario& s);
void validate(const SimScenario& s);

/// Overwrites xi0 and eta0 with uniform draws on [-1, 1].
void randomize_initial_states(std::vector<NormalFormAgent>& agents, std::uint64_t seed);

/// Uniform time grid t_k = k dt, k = 0..round(t_end / dt).
std::vector<double> time_grid(double t_end, double dt);

Trajectory simulate_fixed(const SimScenario& s);

/// Samples the mode path from (s.seed, run_index). The graph is held for
/// each whole step, so a jump takes effect at the first step boundary at or
/// after it.
Trajectory simulate_switching(const SimScenario& s, std::uint64_t run_index = 0);

/// Fixed or switching run with the observer in the loop.
Trajectory simulate_with_observer(const SimScenario& s);

/// Dispatches on the topology kind.
Trajectory simulate(const SimScenario& s);

/// Runs `runs` switching simulations with run indices 0..runs-1.
MonteCarloResult monte_carlo_ms(const SimScenario& s, int runs);

/// max_ij |xi_hat_i - xi_hat_j|^2 per sample.
std::vector<double> squared_state_disagreement(const Trajectory& traj);

}  // namespace sim
}  // namespace hetcons
