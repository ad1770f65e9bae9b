#pragma once

#include <optional>
#include <span>
#include <string>
#include <vector>

#include "hetcons/sim.hpp"

namespace hetcons {

/// Least-squares fit of ln d(t) = intercept - rate t over a window.
struct RateFit {
  double rate = 0.0;
  double intercept = 0.0;
  double t_start = 0.0;
  double t_end = 0.0;
  double r_squared = 0.0;
};

struct FixedSpeed {
  double speed = 0.0;
  double coupling_term = 0.0;
  /// Smallest nonzero real part of eig(-A).
  double target_term = 0.0;
  /// Largest nonzero real part of eig(-A); differs from target_term only
  /// when A has more than one stable pole.
  double target_term_alternate = 0.0;
  std::optional<std::string> warning;
};

namespace metrics {

/// Values below this floor are clamped before taking logarithms.
inline constexpr double kLogFloor = 1e-15;

/// max_ij |y_i - y_j| per sample.
std::vector<double> disagreement(const Trajectory& traj);

/// Fits on samples with t in [t_start, t_end].
RateFit empirical_rate(std::span<const double> times, std::span<const double> series,
                       double t_start, double t_end);

/// Default window: the last 60% of the horizon.
RateFit empirical_rate(std::span<const double> times, std::span<const double> series);

/// Fixed-topology speed min{mu sqrt(q1 r_hat) B^T nu Re lambda_min(L),
/// lambda_min(-A)} with the smallest-nonzero-real-part convention. Needs a
/// rank-one gain and a graph with a spanning tree.
FixedSpeed theoretical_speed_fixed(const CompanionSystem& cs, const ConsensusGain& gain,
                                   const Matrix& laplacian);

double theoretical_speed_switching(const MarkovTopology& mt, const ConsensusGain& gain,
                                   const CompanionSystem& cs);

}  // namespace metrics
}  // namespace hetcons
