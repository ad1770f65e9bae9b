#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "hetcons/graph.hpp"
#include "hetcons/synthesis.hpp"

namespace hetcons {

/// SplitMix64 stream. Streams keyed by (seed, run index) are independent of
/// the order in which runs execute.
class Rng {
 public:
  Rng(std::uint64_t seed, std::uint64_t stream = 0);

  std::uint64_t next();
  /// Uniform on [0, 1) with 53 random bits.
  double uniform();
  /// Uniform on [lo, hi).
  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }
  /// Exponential with the given rate (> 0).
  double exponential(double rate);

 private:
  std::uint64_t state_;
};

/// Graphs indexed by the modes of a continuous-time Markov chain.
struct MarkovTopology {
  std::vector<DiGraph> graphs;
  Matrix generator;
  Vector pi;

  int modes() const { return static_cast<int>(graphs.size()); }
  int nodes() const { return graphs.front().size(); }
};

/// Mode held on [from, to). Modes are 0-based.
struct ModeInterval {
  int mode = 0;
  double from = 0.0;
  double to = 0.0;
};

struct GraphStatus {
  bool has_spanning_tree = false;
  bool balanced = false;
};

struct A4Report {
  bool union_has_spanning_tree = false;
  bool union_balanced = false;
  std::vector<GraphStatus> per_graph;

  bool passes() const { return union_has_spanning_tree && union_balanced; }
};

namespace switching {

/// Validates the generator (square, off-diagonals >= 0, zero row sums).
void validate_generator(const Matrix& generator);

/// pi with pi^T Q = 0 and sum(pi) = 1 for an irreducible generator.
Vector stationary_distribution(const Matrix& generator);

/// Validates graphs and generator and fills in the stationary distribution.
MarkovTopology make_topology(std::vector<DiGraph> graphs, Matrix generator);

/// Piecewise-constant mode path tiling [0, t_end], starting from pi.
std::vector<ModeInterval> sample_path(const MarkovTopology& mt, double t_end,
                                      std::uint64_t seed, std::uint64_t run_index = 0);

/// Mode active at time t (right-continuous).
int mode_at(std::span<const ModeInterval> path, double t);

A4Report check_A4(const MarkovTopology& mt);

DiGraph union_graph(const MarkovTopology& mt);

/// Smallest eigenvalue of L + L^T restricted to the complement of the
/// all-ones vector.
double lambda_min_symmetric_part(const Matrix& laplacian);

/// Mean-square consensus speed floor pi_min mu sqrt(q1 r_hat) B^T nu
/// lambda_min(L_u + L_u^T) for rank-one gains under A4.
double speed_bound(const MarkovTopology& mt, const ConsensusGain& gain,
                   const CompanionSystem& cs);

/// Stationary average of the mode Laplacians.
Matrix mean_laplacian(const MarkovTopology& mt);

}  // namespace switching
}  // namespace hetcons
