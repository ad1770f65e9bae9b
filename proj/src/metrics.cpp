#include "hetcons/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

namespace hetcons::metrics {

std::vector<double> disagreement(const Trajectory& traj) {
  std::vector<double> d(traj.samples(), 0.0);
  if (traj.agents.empty()) return d;
  for (int k = 0; k < traj.samples(); ++k) {
    double lo = traj.agents.front().y[k];
    double hi = lo;
    for (const AgentSeries& a : traj.agents) {
      lo = std::min(lo, a.y[k]);
      hi = std::max(hi, a.y[k]);
    }
    d[k] = hi - lo;
  }
  return d;
}

RateFit empirical_rate(std::span<const double> times, std::span<const double> series,
                       double t_start, double t_end) {
  if (times.size() != series.size()) {
    throw Error(ErrorCode::DimensionMismatch, "times and series differ in length");
  }
  double n = 0.0, st = 0.0, sy = 0.0;
  std::vector<std::pair<double, double>> points;
  for (std::size_t k = 0; k < times.size(); ++k) {
    if (times[k] < t_start || times[k] > t_end) continue;
    const double v = series[k];
    if (!std::isfinite(v) || v < 0.0) {
      throw Error(ErrorCode::NonPositiveSeries,
                  "series must be finite and nonnegative inside the fit window");
    }
    const double y = std::log(std::max(v, kLogFloor));
    points.emplace_back(times[k], y);
    n += 1.0;
    st += times[k];
    sy += y;
  }
  if (points.size() < 2) {
    throw Error(ErrorCode::EmptyWindow, "fit window holds fewer than two samples");
  }
  const double mt = st / n, my = sy / n;
  double stt = 0.0, sty = 0.0, syy = 0.0;
  for (const auto& [t, y] : points) {
    stt += (t - mt) * (t - mt);
    sty += (t - mt) * (y - my);
    syy += (y - my) * (y - my);
  }
  if (stt <= 0.0) throw Error(ErrorCode::EmptyWindow, "fit window has zero width");
  const double slope = sty / stt;
  RateFit fit;
  fit.rate = -slope;
  fit.intercept = my - slope * mt;
  fit.t_start = points.front().first;
  fit.t_end = points.back().first;
  double sse = 0.0;
  for (const auto& [t, y] : points) {
    const double e = y - (fit.intercept + slope * t);
    sse += e * e;
  }
  fit.r_squared = syy > 0.0 ? std::clamp(1.0 - sse / syy, 0.0, 1.0) : 1.0;
  return fit;
}

RateFit empirical_rate(std::span<const double> times, std::span<const double> series) {
  if (times.empty()) throw Error(ErrorCode::EmptyWindow, "empty series");
  const double t0 = times.front(), t1 = times.back();
  return empirical_rate(times, series, t0 + 0.4 * (t1 - t0), t1);
}

FixedSpeed theoretical_speed_fixed(const CompanionSystem& cs, const ConsensusGain& gain,
                                   const Matrix& laplacian) {
  if (gain.rank != GainRank::One || !gain.q1) {
    throw Error(ErrorCode::NotRankOne, "fixed-topology speed needs a rank-one gain");
  }
  if (!graph::has_spanning_tree(DiGraph::from_laplacian(laplacian))) {
    throw Error(ErrorCode::NoSpanningTree, "graph has no spanning tree");
  }
  FixedSpeed out;
  const Complex lambda = graph::lambda_min_nonzero(laplacian);
  out.coupling_term =
      gain.mu * std::sqrt(*gain.q1 * gain.r_hat) * cs.B.dot(cs.nu) * lambda.real();

  double smallest = std::numeric_limits<double>::infinity();
  double largest = 0.0;
  const double zero_tol = 1e-9 * std::max(1.0, linalg::norm(cs.A));
  for (const Complex& z : linalg::eig(-cs.A)) {
    if (std::abs(z.real()) <= zero_tol) continue;
    smallest = std::min(smallest, z.real());
    largest = std::max(largest, z.real());
  }
  out.target_term = smallest;
  out.target_term_alternate = largest;
  out.speed = std::min(out.coupling_term, out.target_term);
  if (largest - smallest > 1e-9 * std::max(1.0, largest)) {
    std::ostringstream msg;
    msg << "lambda_min(-A) taken as the smallest nonzero real part (" << smallest
        << "); the largest nonzero real part (" << largest << ") would give speed "
        << std::min(out.coupling_term, largest);
    out.warning = msg.str();
  }
  return out;
}

double theoretical_speed_switching(const MarkovTopology& mt, const ConsensusGain& gain,
                                   const CompanionSystem& cs) {
  return switching::speed_bound(mt, gain, cs);
}

}  // namespace hetcons::metrics
