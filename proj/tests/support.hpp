#pragma once

#include <random>
#include <vector>

#include "hetcons/agents.hpp"
#include "hetcons/graph.hpp"
#include "hetcons/sim.hpp"
#include "hetcons/synthesis.hpp"

namespace hetcons::testing {

inline std::vector<NormalFormAgent> five_agents() {
  std::vector<NormalFormAgent> out;
  for (const std::string& name : agents::builtin_names()) out.push_back(agents::builtin(name));
  return out;
}

/// The five benchmark agents with target poles {-1, -2} and a rank-one gain.
inline SimScenario five_agent_scenario(Topology topology, double mu = 1.0, double q1 = 1.0,
                                       double r_hat = 1.0, std::uint64_t seed = 42,
                                       bool random_init = true) {
  SimScenario s;
  s.agents = five_agents();
  if (random_init) sim::randomize_initial_states(s.agents, seed);
  const Complex poles[] = {{-1.0, 0.0}, {-2.0, 0.0}};
  s.cs = synthesis::design_companion(poles);
  s.gain = synthesis::rank_one_gain(s.cs, mu, q1, r_hat);
  s.topology = std::move(topology);
  s.seed = seed;
  sim::prepare(s);
  return s;
}

inline MarkovTopology default_switching() {
  Matrix q(2, 2);
  q << -1.0, 1.0, 1.0, -1.0;
  return switching::make_topology(
      {graph::default_switching_first(), graph::default_switching_second()}, q);
}

/// `count` stable poles, closed under conjugation, real parts in [-3, -0.2].
inline std::vector<Complex> random_stable_poles(std::mt19937_64& rng, int count) {
  std::uniform_real_distribution<double> re(-3.0, -0.2);
  std::uniform_real_distribution<double> im(0.3, 2.0);
  std::bernoulli_distribution pair(0.5);
  std::vector<Complex> out;
  while (static_cast<int>(out.size()) < count) {
    if (count - static_cast<int>(out.size()) >= 2 && pair(rng)) {
      const Complex z(re(rng), im(rng));
      out.push_back(z);
      out.push_back(std::conj(z));
    } else {
      out.emplace_back(re(rng), 0.0);
    }
  }
  return out;
}

/// Unit-weight digraph with each off-diagonal edge present with probability p.
inline DiGraph random_graph(std::mt19937_64& rng, int n, double p) {
  std::bernoulli_distribution edge(p);
  Matrix w = Matrix::Zero(n, n);
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < n; ++j) {
      if (i != j && edge(rng)) w(i, j) = 1.0;
    }
  }
  return DiGraph::from_weights(w);
}

/// Unit-weight digraph on n nodes from a bitmask over the n(n-1)
/// off-diagonal slots in row-major order.
inline DiGraph graph_from_mask(int n, unsigned mask) {
  Matrix w = Matrix::Zero(n, n);
  int bit = 0;
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < n; ++j) {
      if (i == j) continue;
      if (mask & (1u << bit)) w(i, j) = 1.0;
      ++bit;
    }
  }
  return DiGraph::from_weights(w);
}

}  // namespace hetcons::testing
