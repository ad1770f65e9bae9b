#pragma once

#include <functional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "hetcons/linalg.hpp"

namespace hetcons {

/// Scalar function of the normal-form coordinates (xi, eta).
using ScalarField =
    std::function<double(std::span<const double> xi, std::span<const double> eta)>;

/// Vector function of (xi, eta); writes n_eta values into `out`.
using VectorField = std::function<void(std::span<const double> xi,
                                       std::span<const double> eta,
                                       std::span<double> out)>;

enum class AgentKind { Affine, AugmentedGeneral };

/// One agent in feedback-linearized normal form:
///
///   xi_k'   = xi_{k+1},             k < r
///   xi_r'   = alpha(xi, eta) + beta(xi, eta) u
///   eta'    = theta(xi, eta)
///   y       = xi_1
///
/// For AugmentedGeneral agents the chain has already been extended by one
/// integrator: the commanded signal is w = u', and the physical input u is an
/// extra state starting at u0.
struct NormalFormAgent {
  int id = 0;
  std::string name;
  int r = 1;
  int n_eta = 0;
  ScalarField alpha;
  ScalarField beta;
  VectorField theta;
  Vector xi0;
  Vector eta0;
  AgentKind kind = AgentKind::Affine;
  double u0 = 0.0;
};

/// |beta| below this aborts the simulation.
inline constexpr double kBetaFloor = 1e-9;

struct AgentRates {
  Vector dxi;
  Vector deta;
  /// Affine: physical u = (u_hat - alpha) / beta. Augmented: w = u'.
  double input = 0.0;
};

/// Initial state of an augmented agent.
struct AugmentedState {
  Vector xi0;  // length r + 1
  Vector eta0;
  double u0 = 0.0;
};

/// Sparse monomial c * prod_k z_k^{e_k} over z = (xi_1..xi_r, eta_1..eta_k).
struct PolyTerm {
  double c = 0.0;
  std::vector<int> e;

  friend bool operator==(const PolyTerm&, const PolyTerm&) = default;
};

using Polynomial = std::vector<PolyTerm>;

/// Full-row-rank decoupling data for one MIMO agent.
struct MimoAgentSlice {
  int p = 1;
  int m = 1;
  std::vector<int> rdeg;
  std::function<Matrix(const Vector& state)> pi_fn;
  std::function<Vector(const Vector& state)> alpha_check_fn;
};

namespace agents {

/// Throws InvalidDimension when sizes or callbacks are inconsistent.
void validate(const NormalFormAgent& agent);

std::vector<std::string> builtin_names();

/// Five heterogeneous benchmark agents "agent1".."agent5". Agents 1, 2, 4, 5
/// have r = 2 and scalar internal dynamics; agent 3 has r = 3 and none.
NormalFormAgent builtin(std::string_view name);

/// Agent 3 in its original coordinates x = (x1, x2, x3) with output x2:
///   x1' = x1 x2 + x1 x3 + u, x2' = x2^2 + x3, x3' = x1 + x2 x3.
/// The normal-form coordinates are the output and its first two Lie
/// derivatives.
Vector agent3_normal_from_state(const Vector& x);
Vector agent3_state_from_normal(const Vector& xi);
/// alpha evaluated in original coordinates (third Lie derivative of x2).
double agent3_alpha_original(const Vector& x);

/// Augments a general (non-affine) agent of relative degree r into an affine
/// agent of relative degree r + 1 whose input is w = u'.
NormalFormAgent augment(int r, ScalarField alpha_tilde, ScalarField beta_tilde,
                        VectorField theta_tilde, AugmentedState state0);

/// Affine agent whose alpha, beta and theta are polynomials.
NormalFormAgent polynomial_agent(int r, int n_eta, Polynomial alpha,
                                 Polynomial beta, std::vector<Polynomial> theta,
                                 Vector xi0, Vector eta0);

double eval_polynomial(const Polynomial& poly, std::span<const double> xi,
                       std::span<const double> eta);

/// Allocation-free core: fills dxi (length r) and deta (length n_eta) and
/// returns the applied input.
double eval_dynamics(const NormalFormAgent& agent, std::span<const double> xi,
                     std::span<const double> eta, double u_hat,
                     std::span<double> dxi, std::span<double> deta);

AgentRates eval_dynamics(const NormalFormAgent& agent, const Vector& xi,
                         const Vector& eta, double u_hat);

/// u = pi^+ (-alpha_check + u_check), so that pi u + alpha_check = u_check.
Vector decoupling_input(const MimoAgentSlice& slice, const Vector& state,
                        const Vector& u_check);

}  // namespace agents
}  // namespace hetcons
