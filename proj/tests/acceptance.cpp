// Acceptance suite: one PASS/FAIL line per criterion. Exit status is nonzero
// when any criterion fails.

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <functional>
#include <limits>
#include <numbers>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "hetcons/graph.hpp"
#include "hetcons/linalg.hpp"
#include "hetcons/metrics.hpp"
#include "hetcons/sim.hpp"
#include "hetcons/switching.hpp"
#include "hetcons/synthesis.hpp"
#include "support.hpp"

namespace hetcons {
namespace {

struct Outcome {
  bool pass = true;
  std::ostringstream detail;

  void check(bool ok, const std::string& what) {
    if (!ok) {
      pass = false;
      detail << " [violated: " << what << "]";
    }
  }
};

CompanionSystem target() {
  const Complex poles[] = {{-1.0, 0.0}, {-2.0, 0.0}};
  return synthesis::design_companion(poles);
}

SimScenario five_agent_scenario(Topology topology, double mu, double q1, std::uint64_t seed,
                                double t_end) {
  SimScenario s = testing::five_agent_scenario(std::move(topology), mu, q1, 1.0, seed);
  s.t_end = t_end;
  return s;
}

using testing::default_switching;

std::vector<Complex> random_poles(std::mt19937_64& rng, int count) {
  std::uniform_real_distribution<double> re(-3.0, -0.2), im(0.3, 2.0);
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

DiGraph graph_from_mask(int n, unsigned mask) {
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

// Earliest sample after which d stays below the threshold; infinity if it
// never settles inside the horizon.
double settling_time(const Trajectory& traj, double threshold) {
  const std::vector<double> d = metrics::disagreement(traj);
  if (d.back() >= threshold) return std::numeric_limits<double>::infinity();
  int k = static_cast<int>(d.size()) - 1;
  while (k > 0 && d[k - 1] < threshold) --k;
  return traj.times[k];
}

Outcome criterion1() {
  Outcome o;
  const CompanionSystem cs = target();
  const ConsensusGain g = synthesis::rank_one_gain(cs, 1.0, 1.0, 1.0);
  o.detail << "b=[" << cs.b[0] << "," << cs.b[1] << "] nu=[" << cs.nu[0] << "," << cs.nu[1] << ","
           << cs.nu[2] << "] K=[" << g.K[0] << "," << g.K[1] << "," << g.K[2] << "]";
  o.check(cs.b == Vector{{2.0, 3.0}}, "b == [2,3]");
  o.check(cs.nu == Vector{{2.0, 3.0, 1.0}}, "nu == [2,3,1]");
  o.check(g.K == RowVector{{2.0, 3.0, 1.0}}, "K == [2,3,1]");
  return o;
}

Outcome criterion2() {
  Outcome o;
  std::mt19937_64 rng(20240601);
  std::uniform_int_distribution<int> order(2, 5);
  std::uniform_real_distribution<double> w(0.1, 10.0);
  double worst_rel = 0.0, worst_res = 0.0;
  for (int trial = 0; trial < 50; ++trial) {
    const int r = order(rng);
    const CompanionSystem cs = synthesis::design_companion(random_poles(rng, r - 1));
    const double q1 = w(rng), r_hat = w(rng);
    const ConsensusGain g = synthesis::rank_one_gain(cs, 1.0, q1, r_hat);
    const Matrix care =
        linalg::solve_care(cs.A, cs.B, g.Q1, Matrix::Constant(1, 1, 1.0 / r_hat));
    worst_rel = std::max(worst_rel, (care - g.P1).norm() / g.P1.norm());
    const Matrix res = g.P1 * cs.A + cs.A.transpose() * g.P1 + g.Q1 -
                       r_hat * g.P1 * cs.B * cs.B.transpose() * g.P1;
    worst_res = std::max(worst_res, res.norm());
  }
  o.detail << "50 systems, max relative |P_closed - P_care| = " << worst_rel
           << ", max closed-form residual = " << worst_res;
  o.check(worst_rel <= 1e-6, "relative error <= 1e-6");
  o.check(worst_res <= 1e-9, "residual <= 1e-9");
  return o;
}

Outcome criterion3() {
  Outcome o;
  std::mt19937_64 rng(77);
  std::uniform_int_distribution<int> nodes(2, 5), poles(1, 4);
  std::uniform_real_distribution<double> w(0.1, 5.0);
  int sampled = 0, consistent = 0;
  double worst = 0.0;
  while (sampled < 100) {
    const int n = nodes(rng);
    const unsigned slots = n * (n - 1);
    const unsigned mask = std::uniform_int_distribution<unsigned>(0, (1u << slots) - 1)(rng);
    const DiGraph g = graph_from_mask(n, mask);
    if (!graph::has_spanning_tree(g)) continue;
    ++sampled;
    const CompanionSystem cs = synthesis::design_companion(random_poles(rng, poles(rng)));
    const ConsensusGain gain = synthesis::rank_one_gain(cs, w(rng), w(rng), w(rng));
    const ClosedLoopSpectrum s =
        synthesis::closed_loop_spectrum(cs, gain, graph::laplacian(g), false);
    if (s.consistent) ++consistent;
    worst = std::max(worst, s.mismatch);
  }
  o.detail << consistent << "/100 spanning-tree digraphs consistent, worst mismatch " << worst;
  o.check(consistent == 100 && worst <= 1e-7, "all 100 within 1e-7");
  return o;
}

Outcome criterion4() {
  Outcome o;
  const double threshold = 1e-3;
  const DiGraph cycle = graph::directed_cycle(5);
  std::vector<double> settle;
  for (const double mu : {1.0, 0.1, 0.01}) {
    const double horizon = mu == 1.0 ? 30.0 : 300.0;
    const Trajectory traj = sim::simulate(five_agent_scenario(cycle, mu, 1.0, 42, horizon));
    const double d_end = metrics::disagreement(traj).back();
    settle.push_back(settling_time(traj, threshold));
    o.detail << "mu=" << mu << ": d(" << horizon << ")=" << d_end << " settles at "
             << settle.back() << "; ";
    o.check(d_end < threshold, "mu=" + std::to_string(mu) + " below 1e-3 by t=" +
                                   std::to_string(static_cast<int>(horizon)));
  }
  o.check(settle[0] < settle[1] && settle[1] < settle[2],
          "time to threshold strictly increases as mu decreases");
  return o;
}

Outcome criterion5() {
  Outcome o;
  const DiGraph cycle = graph::directed_cycle(5);
  std::vector<double> rates, theory;
  for (const double q1 : {1.0, 10.0, 100.0}) {
    const SimScenario s = five_agent_scenario(cycle, 1.0, q1, 42, 30.0);
    const Trajectory traj = sim::simulate(s);
    const RateFit fit = metrics::empirical_rate(traj.times, metrics::disagreement(traj));
    rates.push_back(fit.rate);
    theory.push_back(metrics::theoretical_speed_fixed(s.cs, s.gain, graph::laplacian(cycle)).speed);
    o.detail << "q1=" << q1 << ": rate " << fit.rate << " (theory " << theory.back() << "); ";
    o.check(std::abs(fit.rate - theory.back()) <= 0.2 * theory.back(),
            "q1=" + std::to_string(static_cast<int>(q1)) + " within 20% of theory");
  }
  o.check(std::abs(rates[1] - rates[2]) < 0.1 * std::max(rates[1], rates[2]),
          "q1=10 and q1=100 within 10%");
  o.check(rates[0] < std::min(rates[1], rates[2]), "q1=1 slower");
  return o;
}

Outcome criterion6() {
  Outcome o;
  SimScenario s = five_agent_scenario(graph::directed_cycle(5), 1.0, 1.0, 42, 30.0);
  const Complex poles[] = {{-3.0, 0.0}, {-4.0, 0.0}, {-5.0, 0.0}};
  s.observer = synthesis::observer_gain(s.cs, RowVector{{1.0, 0.0, 0.0}}, poles);
  const Trajectory traj = sim::simulate_with_observer(s);
  // The error reaches round-off near t = 11; fit where it is well above it.
  double lo = std::numeric_limits<double>::infinity(), hi = 0.0;
  for (const AgentSeries& a : traj.agents) {
    const double rate = metrics::empirical_rate(traj.times, a.observer_error, 2.0, 8.0).rate;
    lo = std::min(lo, rate);
    hi = std::max(hi, rate);
  }
  const double d_end = metrics::disagreement(traj).back();
  o.detail << "observer error rates in [" << lo << ", " << hi << "] over t in [2, 8]; d(30)="
           << d_end;
  o.check(lo >= 2.4 && hi <= 3.6, "rates in [2.4, 3.6]");
  o.check(d_end < 1e-3, "consensus below 1e-3 at t=30");
  return o;
}

Outcome criterion7() {
  Outcome o;
  const MarkovTopology mt = default_switching();
  const A4Report a4 = switching::check_A4(mt);
  bool components_fail = true;
  for (const GraphStatus& g : a4.per_graph) {
    components_fail = components_fail && !g.has_spanning_tree && !g.balanced;
  }
  const SimScenario s = five_agent_scenario(mt, 1.0, 1.0, 7, 30.0);
  const MonteCarloResult mc = sim::monte_carlo_ms(s, 200);
  const double decay = mc.mean_square.front() / mc.mean_square.back();
  const RateFit fit = metrics::empirical_rate(mc.times, mc.mean_square);
  const double bound = switching::speed_bound(mt, s.gain, s.cs);
  o.detail << "A4 union passes=" << a4.passes() << ", components treeless/unbalanced="
           << components_fail << "; runs=" << mc.runs << " failed=" << mc.failed
           << "; decay factor " << decay << "; log-fit rate " << fit.rate << " over ["
           << fit.t_start << ", " << fit.t_end << "] vs bound " << bound << " (ratio "
           << fit.rate / bound << ")";
  o.check(a4.passes(), "A4 passes on the union");
  o.check(components_fail, "each component individually unbalanced and treeless");
  o.check(mc.failed == 0 && mc.runs == 200, "200 completed runs");
  o.check(decay >= 1e4, "decay factor >= 1e4");
  o.check(fit.rate >= 0.8 * bound, "rate >= 0.8 x bound");
  return o;
}

Outcome criterion8() {
  Outcome o;
  int graphs = 0, agree = 0, at4 = 0;
  for (int n = 1; n <= 4; ++n) {
    const unsigned slots = n * (n - 1);
    for (unsigned mask = 0; mask < (1u << slots); ++mask) {
      const DiGraph g = graph_from_mask(n, mask);
      int zeros = 0;
      for (const Complex& z : linalg::eig(graph::laplacian(g))) {
        if (std::abs(z) < 1e-6) ++zeros;
      }
      ++graphs;
      if (n == 4) ++at4;
      if (graph::has_spanning_tree(g) == (zeros == 1)) ++agree;
    }
  }
  o.detail << agree << "/" << graphs << " digraphs agree (" << at4 << " at n=4)";
  o.check(agree == graphs && at4 == 4096, "exhaustive agreement");
  return o;
}

Outcome criterion9() {
  Outcome o;
  const NumericSettings& ns = numeric_settings();
  std::mt19937_64 rng(9);
  std::normal_distribution<double> g;
  double lyap = 0.0, care = 0.0;
  int lyap_cases = 0, care_cases = 0;
  const auto lyap_case = [&](const Matrix& a, const Matrix& q) {
    const Matrix p = linalg::solve_lyapunov(a, q);
    lyap = std::max(lyap, (a.transpose() * p + p * a + q).norm() / std::max(1.0, q.norm()));
    ++lyap_cases;
  };
  const auto care_case = [&](const Matrix& a, const Matrix& b, const Matrix& q, const Matrix& r) {
    const Matrix p = linalg::solve_care(a, b, q, r);
    const Matrix res = a.transpose() * p + p * a + q - p * b * r.inverse() * b.transpose() * p;
    care = std::max(care, res.norm() / std::max(1.0, q.norm()));
    ++care_cases;
  };
  lyap_case(Matrix::Constant(1, 1, -1.0), Matrix::Constant(1, 1, 2.0));
  lyap_case(Vector{{-1.0, -2.0}}.asDiagonal().toDenseMatrix(), Matrix::Identity(2, 2));
  const Matrix one = Matrix::Identity(1, 1);
  care_case(Matrix::Zero(1, 1), one, one, one);
  care_case(one, one, 2.0 * one, one);
  const CompanionSystem cs = target();
  care_case(cs.A, cs.B, cs.nu * cs.nu.transpose(), one);
  for (int trial = 0; trial < 40; ++trial) {
    const int n = 1 + trial % 6;
    Matrix a(n, n), f(n, n);
    for (int i = 0; i < n; ++i) {
      for (int j = 0; j < n; ++j) {
        a(i, j) = g(rng);
        f(i, j) = g(rng);
      }
    }
    lyap_case(a - (linalg::spectral_abscissa(a) + 0.5) * Matrix::Identity(n, n),
              f * f.transpose() + 0.1 * Matrix::Identity(n, n));
    // Companion pairs are controllable by construction.
    const CompanionSystem c = synthesis::design_companion(random_poles(rng, n));
    Matrix h(n + 1, n + 1);
    for (int i = 0; i <= n; ++i) {
      for (int j = 0; j <= n; ++j) h(i, j) = g(rng);
    }
    care_case(c.A, c.B, h * h.transpose() + 0.1 * Matrix::Identity(n + 1, n + 1), one);
  }

  // RK4 order on the five-agent fixed scenario.
  const auto final_outputs = [](double dt) {
    SimScenario s = five_agent_scenario(graph::directed_cycle(5), 1.0, 1.0, 42, 2.0);
    s.dt = dt;
    const Trajectory traj = sim::simulate(s);
    Vector y(s.size());
    for (int i = 0; i < s.size(); ++i) y[i] = traj.agents[i].y.back();
    return y;
  };
  const double h = 0.1;
  const Vector ref = final_outputs(h / 8.0);
  const double ratio = (final_outputs(h) - ref).norm() / (final_outputs(h / 2.0) - ref).norm();

  // Occupancy of the symmetric two-state chain.
  const MarkovTopology mt = default_switching();
  const double horizon = 1e4;
  double occupancy_error = 0.0;
  std::vector<double> time(mt.modes(), 0.0);
  for (const ModeInterval& iv : switching::sample_path(mt, horizon, 7)) {
    time[iv.mode] += iv.to - iv.from;
  }
  for (int k = 0; k < mt.modes(); ++k) {
    occupancy_error = std::max(occupancy_error, std::abs(time[k] / horizon - mt.pi[k]));
  }

  o.detail << lyap_cases << " Lyapunov solves, max relative residual " << lyap << "; "
           << care_cases << " Riccati solves, max relative residual " << care
           << "; RK4 ratio " << ratio << "; occupancy error " << occupancy_error;
  o.check(lyap <= ns.lyapunov_residual, "Lyapunov residual bound");
  o.check(care <= ns.care_residual, "Riccati residual bound");
  o.check(ratio >= 8.0 && ratio <= 32.0, "RK4 ratio in [8, 32]");
  o.check(occupancy_error <= 0.02, "occupancy within 0.02");
  return o;
}

}  // namespace
}  // namespace hetcons

int main() {
  using hetcons::Outcome;
  const std::vector<std::pair<const char*, std::function<Outcome()>>> criteria = {
      {"synthesis reproduction", hetcons::criterion1},
      {"rank-one gain equals Riccati solution", hetcons::criterion2},
      {"closed-loop spectrum formula", hetcons::criterion3},
      {"non-conservative coupling", hetcons::criterion4},
      {"speed saturation", hetcons::criterion5},
      {"observer", hetcons::criterion6},
      {"Markov switching", hetcons::criterion7},
      {"spanning-tree oracle", hetcons::criterion8},
      {"numerics", hetcons::criterion9},
  };
  int failed = 0;
  for (std::size_t k = 0; k < criteria.size(); ++k) {
    Outcome o;
    try {
      o = criteria[k].second();
    } catch (const std::exception& e) {
      o.pass = false;
      o.detail << "exception: " << e.what();
    }
    if (!o.pass) ++failed;
    std::printf("%s %zu %s: %s\n", o.pass ? "PASS" : "FAIL", k + 1, criteria[k].first,
                o.detail.str().c_str());
    std::fflush(stdout);
  }
  std::printf("%zu/%zu criteria passed\n", criteria.size() - failed, criteria.size());
  return failed == 0 ? 0 : 1;
}
