#include "hetcons/sim.hpp"

#include <algorithm>
#include <cmath>
#include <exception>
#include <thread>

namespace hetcons::sim {
namespace {

constexpr std::uint64_t kInitStream = 0x1F1;

struct Slot {
  int xi = 0;   // xi (r_i) followed directly by phi (m): xi_hat is contiguous
  int phi = 0;
  int eta = 0;
  int u = -1;   // augmented agents only
  int obs = -1; // observer only
  int r = 0;
  int m = 0;
  int n_eta = 0;
};

class Engine {
 public:
  explicit Engine(const SimScenario& s) : s_(s), n_(s.size()), r_(s.cs.r) {
    int offset = 0;
    for (int i = 0; i < n_; ++i) {
      const NormalFormAgent& a = s.agents[i];
      Slot slot;
      slot.r = a.r;
      slot.m = s.controllers[i].order();
      slot.n_eta = a.n_eta;
      slot.xi = offset;
      slot.phi = offset + slot.r;
      slot.eta = slot.phi + slot.m;
      offset = slot.eta + slot.n_eta;
      if (a.kind == AgentKind::AugmentedGeneral) slot.u = offset++;
      if (s.observer) {
        slot.obs = offset;
        offset += r_;
      }
      slots_.push_back(slot);
    }
    dim_ = offset;
    kz_.resize(n_);
    v_.resize(n_);
  }

  int dim() const { return dim_; }

  std::vector<double> initial_state() const {
    std::vector<double> x(dim_, 0.0);
    for (int i = 0; i < n_; ++i) {
      const NormalFormAgent& a = s_.agents[i];
      const Slot& sl = slots_[i];
      for (int k = 0; k < sl.r; ++k) x[sl.xi + k] = a.xi0[k];
      for (int k = 0; k < sl.n_eta; ++k) x[sl.eta + k] = a.eta0[k];
      if (sl.u >= 0) x[sl.u] = a.u0;
      if (sl.obs >= 0 && !s_.observer_init.empty()) {
        for (int k = 0; k < r_; ++k) x[sl.obs + k] = s_.observer_init[i][k];
      }
    }
    return x;
  }

  /// dx = f(x) under adjacency w; fills inputs with the physical input.
  void deriv(const std::vector<double>& x, const Matrix& w, std::vector<double>& dx,
             std::vector<double>* inputs) {
    const RowVector& K = s_.gain.K;
    for (int i = 0; i < n_; ++i) {
      const Slot& sl = slots_[i];
      const double* z = x.data() + (sl.obs >= 0 ? sl.obs : sl.xi);
      double acc = 0.0;
      for (int k = 0; k < r_; ++k) acc += K[k] * z[k];
      kz_[i] = acc;
    }
    for (int i = 0; i < n_; ++i) {
      double acc = 0.0;
      for (int j = 0; j < n_; ++j) acc += w(i, j) * (kz_[i] - kz_[j]);
      v_[i] = -acc;
    }
    for (int i = 0; i < n_; ++i) {
      const Slot& sl = slots_[i];
      const LocalController& lc = s_.controllers[i];
      const double* xi = x.data() + sl.xi;
      const double* phi = x.data() + sl.phi;
      double u_hat = v_[i];
      if (sl.m > 0) {
        u_hat = phi[0];
      } else {
        for (int b = 0; b < sl.r; ++b) u_hat += lc.F[b] * xi[b];
      }
      const double input = agents::eval_dynamics(
          s_.agents[i], std::span(xi, sl.r), std::span(x.data() + sl.eta, sl.n_eta), u_hat,
          std::span(dx.data() + sl.xi, sl.r), std::span(dx.data() + sl.eta, sl.n_eta));
      for (int a = 0; a < sl.m; ++a) {
        double acc = lc.G[a] * v_[i];
        for (int b = 0; b < sl.r; ++b) acc += lc.D(a, b) * xi[b];
        for (int b = 0; b < sl.m; ++b) acc += lc.E(a, b) * phi[b];
        dx[sl.phi + a] = acc;
      }
      if (sl.u >= 0) dx[sl.u] = input;
      if (inputs) (*inputs)[i] = sl.u >= 0 ? x[sl.u] : input;
      if (sl.obs >= 0) observer_rates(x.data() + sl.xi, x.data() + sl.obs, v_[i],
                                      dx.data() + sl.obs);
    }
  }

  void record(Trajectory& traj, int k, const std::vector<double>& x,
              const std::vector<double>& inputs) const {
    for (int i = 0; i < n_; ++i) {
      const Slot& sl = slots_[i];
      AgentSeries& series = traj.agents[i];
      series.y[k] = x[sl.xi];
      for (int c = 0; c < r_; ++c) series.xi_hat(k, c) = x[sl.xi + c];
      for (int c = 0; c < sl.n_eta; ++c) series.eta(k, c) = x[sl.eta + c];
      series.u[k] = inputs[i];
      if (sl.obs >= 0) {
        double e2 = 0.0;
        for (int c = 0; c < r_; ++c) {
          const double e = x[sl.xi + c] - x[sl.obs + c];
          e2 += e * e;
        }
        series.observer_error[k] = std::sqrt(e2);
      }
    }
  }

  void allocate(Trajectory& traj, int samples) const {
    traj.agents.resize(n_);
    for (int i = 0; i < n_; ++i) {
      AgentSeries& series = traj.agents[i];
      series.y.assign(samples, 0.0);
      series.xi_hat = Matrix::Zero(samples, r_);
      series.eta = Matrix::Zero(samples, slots_[i].n_eta);
      series.u.assign(samples, 0.0);
      if (s_.observer) series.observer_error.assign(samples, 0.0);
    }
  }

  static void truncate(Trajectory& traj, int samples) {
    traj.times.resize(samples);
    if (!traj.modes.empty()) traj.modes.resize(std::min<int>(samples, traj.modes.size()));
    for (AgentSeries& series : traj.agents) {
      series.y.resize(samples);
      series.xi_hat.conservativeResize(samples, Eigen::NoChange);
      series.eta.conservativeResize(samples, Eigen::NoChange);
      series.u.resize(samples);
      if (!series.observer_error.empty()) series.observer_error.resize(samples);
    }
  }

 private:
  void observer_rates(const double* xi_hat, const double* xc, double v, double* out) const {
    const ObserverGain& ob = *s_.observer;
    const Matrix& A = s_.cs.A;
    double innovation = 0.0;
    for (int k = 0; k < r_; ++k) innovation += ob.C[k] * (xi_hat[k] - xc[k]);
    for (int k = 0; k < r_; ++k) {
      double acc = s_.cs.B[k] * v + ob.M[k] * innovation;
      for (int l = 0; l < r_; ++l) acc += A(k, l) * xc[l];
      out[k] = acc;
    }
  }

  const SimScenario& s_;
  int n_;
  int r_;
  int dim_ = 0;
  std::vector<Slot> slots_;
  std::vector<double> kz_;
  std::vector<double> v_;
};

bool state_ok(const std::vector<double>& x) {
  for (double value : x) {
    if (!(std::abs(value) <= kDivergenceBound)) return false;
  }
  return true;
}

// Integrates with mode_of_step(k) selecting the adjacency for step k.
template <typename ModeFn>
Trajectory integrate(const SimScenario& s, const std::vector<Matrix>& weights,
                     ModeFn mode_of_step, bool record_modes) {
  Engine engine(s);
  Trajectory traj;
  traj.times = time_grid(s.t_end, s.dt);
  const int samples = traj.samples();
  const int steps = samples - 1;
  engine.allocate(traj, samples);
  if (record_modes) traj.modes.assign(samples, 0);

  const int dim = engine.dim();
  std::vector<double> x = engine.initial_state();
  std::vector<double> k1(dim), k2(dim), k3(dim), k4(dim), tmp(dim);
  std::vector<double> inputs(s.size(), 0.0);
  const double dt = s.dt;
  const double half = 0.5 * dt;

  int recorded = 0;
  try {
    for (int k = 0; k <= steps; ++k) {
      const int mode = k < steps ? mode_of_step(k) : (steps > 0 ? mode_of_step(steps - 1) : 0);
      const Matrix& w = weights[mode];
      engine.deriv(x, w, k1, &inputs);
      engine.record(traj, k, x, inputs);
      if (record_modes) traj.modes[k] = mode;
      recorded = k + 1;
      if (k == steps) break;

      for (int c = 0; c < dim; ++c) tmp[c] = x[c] + half * k1[c];
      engine.deriv(tmp, w, k2, nullptr);
      for (int c = 0; c < dim; ++c) tmp[c] = x[c] + half * k2[c];
      engine.deriv(tmp, w, k3, nullptr);
      for (int c = 0; c < dim; ++c) tmp[c] = x[c] + dt * k3[c];
      engine.deriv(tmp, w, k4, nullptr);
      for (int c = 0; c < dim; ++c) {
        x[c] += dt / 6.0 * (k1[c] + 2.0 * k2[c] + 2.0 * k3[c] + k4[c]);
      }
      if (!state_ok(x)) {
        throw Error(ErrorCode::FiniteEscape,
                    "state left the divergence bound at t = " +
                        std::to_string(traj.times[k + 1]));
      }
    }
  } catch (const Error& e) {
    Engine::truncate(traj, recorded);
    traj.diverged = true;
    throw SimulationError(e, std::make_shared<const Trajectory>(std::move(traj)));
  }
  return traj;
}

Trajectory run_fixed(const SimScenario& s) {
  const std::vector<Matrix> weights{std::get<DiGraph>(s.topology).weights()};
  return integrate(s, weights, [](int) { return 0; }, false);
}

Trajectory run_switching(const SimScenario& s, std::uint64_t run_index) {
  const MarkovTopology& mt = std::get<MarkovTopology>(s.topology);
  if (!s.override_a4 && !switching::check_A4(mt).passes()) {
    throw Error(ErrorCode::A4Violated,
                "union graph must be balanced and have a spanning tree");
  }
  std::vector<Matrix> weights;
  for (const DiGraph& g : mt.graphs) weights.push_back(g.weights());
  const std::vector<ModeInterval> path = switching::sample_path(mt, s.t_end, s.seed, run_index);
  const std::vector<double> grid = time_grid(s.t_end, s.dt);
  Trajectory traj;
  try {
    traj = integrate(
        s, weights, [&](int k) { return switching::mode_at(path, grid[k]); }, true);
  } catch (const SimulationError& e) {
    auto partial = std::make_shared<Trajectory>(e.partial());
    partial->mode_path = path;
    throw SimulationError(e, partial);
  }
  traj.mode_path = path;
  return traj;
}

}  // namespace

std::vector<double> time_grid(double t_end, double dt) {
  const long long n = std::llround(t_end / dt);
  std::vector<double> t(static_cast<std::size_t>(n) + 1);
  for (long long k = 0; k <= n; ++k) t[k] = static_cast<double>(k) * dt;
  return t;
}

void prepare(SimScenario& s) {
  s.controllers.clear();
  for (const NormalFormAgent& a : s.agents) {
    s.controllers.push_back(synthesis::local_controller(s.cs, a));
  }
  validate(s);
}

void validate(const SimScenario& s) {
  const auto fail = [](const std::string& what) {
    throw Error(ErrorCode::InvalidDimension, what);
  };
  if (!(s.dt > 0.0) || !std::isfinite(s.dt) || !std::isfinite(s.t_end) || s.t_end < s.dt) {
    throw Error(ErrorCode::InvalidArgument, "simulation needs dt > 0 and t_end >= dt");
  }
  if (s.agents.empty()) fail("simulation needs at least one agent");
  if (s.controllers.size() != s.agents.size()) fail("one local controller per agent required");
  if (s.gain.K.size() != s.cs.r) fail("gain length must equal the target degree");
  for (std::size_t i = 0; i < s.agents.size(); ++i) {
    agents::validate(s.agents[i]);
    if (s.agents[i].r > s.cs.r) {
      throw Error(ErrorCode::DegreeExceedsTarget, "agent degree above the target degree");
    }
    if (s.controllers[i].agent_r != s.agents[i].r ||
        s.controllers[i].order() != s.cs.r - s.agents[i].r ||
        (s.controllers[i].is_static() && s.controllers[i].F.size() != s.agents[i].r)) {
      fail("local controller does not match agent " + std::to_string(i + 1));
    }
  }
  const int nodes = std::visit(
      [](const auto& t) {
        if constexpr (std::is_same_v<std::decay_t<decltype(t)>, DiGraph>) {
          return t.size();
        } else {
          return t.nodes();
        }
      },
      s.topology);
  if (nodes != s.size()) fail("topology node count must equal the agent count");
  if (s.observer) {
    if (s.observer->C.size() != s.cs.r || s.observer->M.size() != s.cs.r) {
      fail("observer C and M must have length r");
    }
    if (!s.observer_init.empty()) {
      if (static_cast<int>(s.observer_init.size()) != s.size()) {
        fail("one observer initial state per agent required");
      }
      for (const Vector& v : s.observer_init) {
        if (v.size() != s.cs.r) fail("observer initial state must have length r");
      }
    }
  }
}

void randomize_initial_states(std::vector<NormalFormAgent>& agents, std::uint64_t seed) {
  Rng rng(seed, kInitStream);
  for (NormalFormAgent& a : agents) {
    for (int k = 0; k < a.r; ++k) a.xi0[k] = rng.uniform(-1.0, 1.0);
    for (int k = 0; k < a.n_eta; ++k) a.eta0[k] = rng.uniform(-1.0, 1.0);
  }
}

Trajectory simulate_fixed(const SimScenario& s) {
  validate(s);
  if (s.is_switching()) {
    throw Error(ErrorCode::InvalidArgument, "simulate_fixed needs a fixed graph");
  }
  return run_fixed(s);
}

Trajectory simulate_switching(const SimScenario& s, std::uint64_t run_index) {
  validate(s);
  if (!s.is_switching()) {
    throw Error(ErrorCode::InvalidArgument, "simulate_switching needs a Markov topology");
  }
  return run_switching(s, run_index);
}

Trajectory simulate_with_observer(const SimScenario& s) {
  if (!s.observer) {
    throw Error(ErrorCode::InvalidArgument, "simulate_with_observer needs an observer gain");
  }
  return simulate(s);
}

Trajectory simulate(const SimScenario& s) {
  return s.is_switching() ? simulate_switching(s) : simulate_fixed(s);
}

std::vector<double> squared_state_disagreement(const Trajectory& traj) {
  const int n = static_cast<int>(traj.agents.size());
  std::vector<double> out(traj.samples(), 0.0);
  for (int k = 0; k < traj.samples(); ++k) {
    double worst = 0.0;
    for (int i = 0; i < n; ++i) {
      for (int j = i + 1; j < n; ++j) {
        worst = std::max(
            worst, (traj.agents[i].xi_hat.row(k) - traj.agents[j].xi_hat.row(k)).squaredNorm());
      }
    }
    out[k] = worst;
  }
  return out;
}

MonteCarloResult monte_carlo_ms(const SimScenario& s, int runs) {
  if (runs < 1) throw Error(ErrorCode::InvalidArgument, "runs must be >= 1");
  validate(s);
  if (!s.is_switching()) {
    throw Error(ErrorCode::InvalidArgument, "monte_carlo_ms needs a Markov topology");
  }
  if (!s.override_a4 && !switching::check_A4(std::get<MarkovTopology>(s.topology)).passes()) {
    throw Error(ErrorCode::A4Violated,
                "union graph must be balanced and have a spanning tree");
  }
  MonteCarloResult result;
  result.times = time_grid(s.t_end, s.dt);
  result.mean_square.assign(result.times.size(), 0.0);

  // Runs execute in batches; batch curves are added in run-index order so
  // the sum does not depend on the thread count.
  const int workers = std::max(1u, std::thread::hardware_concurrency());
  std::vector<std::vector<double>> curves(workers);
  std::vector<std::exception_ptr> errors(workers);
  std::exception_ptr first_error;
  for (int start = 0; start < runs; start += workers) {
    const int batch = std::min(workers, runs - start);
    const auto job = [&](int slot) {
      errors[slot] = nullptr;
      try {
        curves[slot] = squared_state_disagreement(run_switching(s, start + slot));
      } catch (const Error&) {
        errors[slot] = std::current_exception();
      }
    };
    if (batch == 1) {
      job(0);
    } else {
      std::vector<std::thread> threads;
      for (int slot = 0; slot < batch; ++slot) threads.emplace_back(job, slot);
      for (std::thread& t : threads) t.join();
    }
    for (int slot = 0; slot < batch; ++slot) {
      if (errors[slot]) {
        if (!first_error) first_error = errors[slot];
        ++result.failed;
        continue;
      }
      for (std::size_t k = 0; k < curves[slot].size(); ++k) {
        result.mean_square[k] += curves[slot][k];
      }
      ++result.runs;
    }
  }
  if (result.runs == 0) std::rethrow_exception(first_error);
  for (double& v : result.mean_square) v /= result.runs;
  return result;
}

}  // namespace hetcons::sim
