#include "hetcons/agents.hpp"

#include <cassert>
#include <cmath>

namespace hetcons::agents {
namespace {

struct ChainAgentParams {
  const char* name;
  int id;
  double damping;
  int power;
  double xi0[2];
  double eta0;
};

// Agents 1, 2, 4, 5: x1' = -a x1 - x1^p + x2, x2' = x3, x3' = u, y = x2.
// Normal form xi = (x2, x3), eta = x1, alpha = 0, beta = 1.
constexpr ChainAgentParams kChainAgents[] = {
    {"agent1", 1, 1.0, 5, {1.0, 0.0}, 0.5},
    {"agent2", 2, 1.0, 3, {-0.8, 0.2}, -0.3},
    {"agent4", 4, 4.0, 3, {-0.3, 0.1}, 0.2},
    {"agent5", 5, 2.0, 5, {0.6, -0.4}, -0.6},
};

NormalFormAgent chain_agent(const ChainAgentParams& p) {
  NormalFormAgent a;
  a.id = p.id;
  a.name = p.name;
  a.r = 2;
  a.n_eta = 1;
  a.alpha = [](std::span<const double>, std::span<const double>) { return 0.0; };
  a.beta = [](std::span<const double>, std::span<const double>) { return 1.0; };
  const double damping = p.damping;
  const int power = p.power;
  a.theta = [damping, power](std::span<const double> xi,
                             std::span<const double> eta, std::span<double> out) {
    out[0] = -damping * eta[0] - std::pow(eta[0], power) + xi[0];
  };
  a.xi0 = Vector{{p.xi0[0], p.xi0[1]}};
  a.eta0 = Vector{{p.eta0}};
  return a;
}

NormalFormAgent third_agent() {
  NormalFormAgent a;
  a.id = 3;
  a.name = "agent3";
  a.r = 3;
  a.n_eta = 0;
  a.alpha = [](std::span<const double> xi, std::span<const double>) {
    const Vector x = agent3_state_from_normal(Vector{{xi[0], xi[1], xi[2]}});
    return agent3_alpha_original(x);
  };
  a.beta = [](std::span<const double>, std::span<const double>) { return 1.0; };
  a.theta = [](std::span<const double>, std::span<const double>, std::span<double>) {};
  a.xi0 = Vector{{0.4, -0.1, 0.0}};
  a.eta0 = Vector(0);
  return a;
}

void require_dims(bool ok, const std::string& what) {
  if (!ok) throw Error(ErrorCode::InvalidDimension, what);
}

}  // namespace

void validate(const NormalFormAgent& agent) {
  require_dims(agent.r >= 1, "agent '" + agent.name + "': relative degree must be >= 1");
  require_dims(agent.n_eta >= 0, "agent '" + agent.name + "': n_eta must be >= 0");
  require_dims(agent.xi0.size() == agent.r,
               "agent '" + agent.name + "': xi0 must have length r");
  require_dims(agent.eta0.size() == agent.n_eta,
               "agent '" + agent.name + "': eta0 must have length n_eta");
  require_dims(static_cast<bool>(agent.alpha) && static_cast<bool>(agent.beta) &&
                   static_cast<bool>(agent.theta),
               "agent '" + agent.name + "': alpha, beta and theta are required");
}

std::vector<std::string> builtin_names() {
  return {"agent1", "agent2", "agent3", "agent4", "agent5"};
}

NormalFormAgent builtin(std::string_view name) {
  if (name == "agent3") return third_agent();
  for (const ChainAgentParams& p : kChainAgents) {
    if (name == p.name) return chain_agent(p);
  }
  throw Error(ErrorCode::UnknownName,
              "unknown builtin agent '" + std::string(name) + "'");
}

Vector agent3_normal_from_state(const Vector& x) {
  const double x1 = x[0], x2 = x[1], x3 = x[2];
  const double xi2 = x2 * x2 + x3;
  return Vector{{x2, xi2, 2.0 * x2 * xi2 + x1 + x2 * x3}};
}

Vector agent3_state_from_normal(const Vector& xi) {
  const double x2 = xi[0];
  const double x3 = xi[1] - x2 * x2;
  const double x1 = xi[2] - 2.0 * x2 * xi[1] - x2 * x3;
  return Vector{{x1, x2, x3}};
}

double agent3_alpha_original(const Vector& x) {
  const double x1 = x[0], x2 = x[1], x3 = x[2];
  return x1 * (x2 + x3) + (6.0 * x2 * x2 + 3.0 * x3) * (x2 * x2 + x3) +
         3.0 * x2 * (x1 + x2 * x3);
}

NormalFormAgent augment(int r, ScalarField alpha_tilde, ScalarField beta_tilde,
                        VectorField theta_tilde, AugmentedState state0) {
  require_dims(r >= 1, "augment: relative degree must be >= 1");
  require_dims(state0.xi0.size() == r + 1, "augment: xi0 must have length r + 1");
  require_dims(alpha_tilde && beta_tilde && theta_tilde,
               "augment: alpha, beta and theta are required");
  if (!std::isfinite(state0.u0) || !state0.xi0.allFinite() || !state0.eta0.allFinite()) {
    throw Error(ErrorCode::InvalidArgument, "augment: initial state must be finite");
  }
  NormalFormAgent a;
  a.name = "augmented";
  a.r = r + 1;
  a.n_eta = static_cast<int>(state0.eta0.size());
  a.alpha = std::move(alpha_tilde);
  a.beta = std::move(beta_tilde);
  a.theta = std::move(theta_tilde);
  a.xi0 = std::move(state0.xi0);
  a.eta0 = std::move(state0.eta0);
  a.kind = AgentKind::AugmentedGeneral;
  a.u0 = state0.u0;
  return a;
}

double eval_polynomial(const Polynomial& poly, std::span<const double> xi,
                       std::span<const double> eta) {
  double sum = 0.0;
  for (const PolyTerm& t : poly) {
    double term = t.c;
    for (std::size_t k = 0; k < t.e.size(); ++k) {
      if (t.e[k] == 0) continue;
      const double z = k < xi.size() ? xi[k] : eta[k - xi.size()];
      term *= t.e[k] == 1 ? z : std::pow(z, t.e[k]);
    }
    sum += term;
  }
  return sum;
}

NormalFormAgent polynomial_agent(int r, int n_eta, Polynomial alpha, Polynomial beta,
                                 std::vector<Polynomial> theta, Vector xi0,
                                 Vector eta0) {
  require_dims(r >= 1 && n_eta >= 0, "custom agent: need r >= 1 and n_eta >= 0");
  require_dims(static_cast<int>(theta.size()) == n_eta,
               "custom agent: theta must have n_eta polynomials");
  const auto check = [&](const Polynomial& p, const std::string& what) {
    for (const PolyTerm& t : p) {
      require_dims(static_cast<int>(t.e.size()) == r + n_eta,
                   "custom agent: " + what + " term needs r + n_eta exponents");
      for (int e : t.e) {
        if (e < 0) {
          throw Error(ErrorCode::InvalidArgument,
                      "custom agent: negative exponent in " + what);
        }
      }
      if (!std::isfinite(t.c)) {
        throw Error(ErrorCode::InvalidArgument,
                    "custom agent: non-finite coefficient in " + what);
      }
    }
  };
  check(alpha, "alpha");
  check(beta, "beta");
  for (const Polynomial& p : theta) check(p, "theta");

  NormalFormAgent a;
  a.name = "custom";
  a.r = r;
  a.n_eta = n_eta;
  a.alpha = [alpha = std::move(alpha)](std::span<const double> xi,
                                       std::span<const double> eta) {
    return eval_polynomial(alpha, xi, eta);
  };
  a.beta = [beta = std::move(beta)](std::span<const double> xi,
                                    std::span<const double> eta) {
    return eval_polynomial(beta, xi, eta);
  };
  a.theta = [theta = std::move(theta)](std::span<const double> xi,
                                       std::span<const double> eta,
                                       std::span<double> out) {
    for (std::size_t k = 0; k < theta.size(); ++k) {
      out[k] = eval_polynomial(theta[k], xi, eta);
    }
  };
  a.xi0 = std::move(xi0);
  a.eta0 = std::move(eta0);
  validate(a);
  return a;
}

double eval_dynamics(const NormalFormAgent& agent, std::span<const double> xi,
                     std::span<const double> eta, double u_hat,
                     std::span<double> dxi, std::span<double> deta) {
  const int r = agent.r;
  const double alpha = agent.alpha(xi, eta);
  const double beta = agent.beta(xi, eta);
  if (!std::isfinite(alpha) || !std::isfinite(beta)) {
    throw Error(ErrorCode::FiniteEscape,
                "agent '" + agent.name + "': alpha/beta evaluated to a non-finite value");
  }
  if (std::abs(beta) < kBetaFloor) {
    throw Error(ErrorCode::BetaNearZero,
                "agent '" + agent.name + "': |beta| = " + std::to_string(std::abs(beta)) +
                    " below floor");
  }
  const double input = (u_hat - alpha) / beta;
  for (int k = 0; k + 1 < r; ++k) dxi[k] = xi[k + 1];
  // alpha + beta * input reproduces u_hat up to rounding; the chain is
  // driven by u_hat directly so it stays an exact integrator chain.
  dxi[r - 1] = u_hat;
  if (agent.n_eta > 0) agent.theta(xi, eta, deta);
  return input;
}

AgentRates eval_dynamics(const NormalFormAgent& agent, const Vector& xi,
                         const Vector& eta, double u_hat) {
  if (xi.size() != agent.r || eta.size() != agent.n_eta) {
    throw Error(ErrorCode::InvalidDimension,
                "eval_dynamics: state sizes do not match the agent");
  }
  AgentRates rates{Vector(agent.r), Vector(agent.n_eta), 0.0};
  rates.input = eval_dynamics(agent, std::span(xi.data(), xi.size()),
                              std::span(eta.data(), eta.size()), u_hat,
                              std::span(rates.dxi.data(), rates.dxi.size()),
                              std::span(rates.deta.data(), rates.deta.size()));
  return rates;
}

Vector decoupling_input(const MimoAgentSlice& slice, const Vector& state,
                        const Vector& u_check) {
  if (slice.p < 1 || slice.m < slice.p ||
      static_cast<int>(slice.rdeg.size()) != slice.p || u_check.size() != slice.p ||
      !slice.pi_fn || !slice.alpha_check_fn) {
    throw Error(ErrorCode::InvalidDimension, "decoupling_input: inconsistent slice");
  }
  const Matrix pi = slice.pi_fn(state);
  const Vector alpha_check = slice.alpha_check_fn(state);
  if (pi.rows() != slice.p || pi.cols() != slice.m || alpha_check.size() != slice.p) {
    throw Error(ErrorCode::InvalidDimension,
                "decoupling_input: pi_fn/alpha_check_fn returned wrong sizes");
  }
  const Vector target = u_check - alpha_check;
  const Vector u = linalg::right_pinv(pi) * target;
  assert((pi * u - target).norm() <= 1e-9 * std::max(1.0, target.norm()));
  return u;
}

}  // namespace hetcons::agents
