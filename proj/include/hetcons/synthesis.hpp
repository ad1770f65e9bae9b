#pragma once

#include <optional>
#include <span>
#include <vector>

#include "hetcons/agents.hpp"
#include "hetcons/linalg.hpp"

namespace hetcons {

/// Shared linear target dynamics with characteristic polynomial
/// s^r + b_r s^{r-1} + ... + b_2 s: one pole at the origin, the others in
/// the open left half plane.
struct CompanionSystem {
  int r = 0;
  /// Coefficients b_2..b_r; b[0] is b_2.
  Vector b;
  Matrix A;
  Vector B;
  /// Left null vector of A, normalized so the last entry is 1 (B^T nu = 1).
  Vector nu;
  /// The r - 1 nonzero eigenvalues of A.
  Spectrum poles;

  /// b_k for k in 2..r.
  double coefficient(int k) const { return b[k - 2]; }
};

enum class GainRank { One, Full };

/// Cooperative gain: v_i = -K sum_j a_ij (xi_hat_i - xi_hat_j). K already
/// includes the coupling strength mu.
struct ConsensusGain {
  double mu = 1.0;
  /// Scalar weight of the rank-one design; absent for a full Q1 design.
  std::optional<double> q1;
  double r_hat = 1.0;
  RowVector K;
  Matrix P1;
  Matrix Q1;
  GainRank rank = GainRank::One;
};

/// Local dynamic controller of one agent:
///   phi' = D xi + E phi + G v,  u = phi_1 / beta - alpha / beta.
/// The 1/beta entry of H is state dependent and evaluated by the simulator.
/// A static controller (agent r equal to the target r) has empty D, E, G.
struct LocalController {
  int agent_id = 0;
  int agent_r = 0;
  Matrix D;
  Matrix E;
  Vector G;
  /// Static agents only: u_hat = F xi + v with F = [0, -b_2, ..., -b_r].
  /// Empty otherwise.
  RowVector F;

  int order() const { return static_cast<int>(E.rows()); }
  bool is_static() const { return order() == 0; }
};

struct ObserverGain {
  RowVector C;
  Vector M;
};

struct ClosedLoopSpectrum {
  /// Analytic multiset for rank-one gains, otherwise the direct one.
  Spectrum values;
  /// Eigenvalues of I (x) A - L (x) B K.
  Spectrum direct;
  bool consistent = true;
  /// Largest cluster-centroid disagreement between the two routes.
  double mismatch = 0.0;
};

namespace synthesis {

CompanionSystem design_companion(std::span<const Complex> stable_poles);

/// Alternate constructor from b_2..b_r; the nonzero roots must be stable.
CompanionSystem companion_from_coefficients(std::span<const double> b);

ConsensusGain rank_one_gain(const CompanionSystem& cs, double mu, double q1,
                            double r_hat);

ConsensusGain full_gain(const CompanionSystem& cs, double mu, const Matrix& q1,
                        double r_hat);

LocalController local_controller(const CompanionSystem& cs,
                                 const NormalFormAgent& agent);

/// Linear part of the agent chain stacked with its local controller, mapping
/// [xi; phi] and v to the stacked derivative. Equals (cs.A, cs.B) when the
/// controller is built for that target.
std::pair<Matrix, Vector> assembled_dynamics(const LocalController& lc);

/// Output-injection gain M placing eig(A - M C) at `poles` (Ackermann on the
/// dual pair). No stability requirement on the poles.
Vector place_output_injection(const Matrix& A, const RowVector& C,
                              std::span<const Complex> poles);

/// Luenberger gain for the companion system with Hurwitz error dynamics.
ObserverGain observer_gain(const CompanionSystem& cs, const RowVector& C,
                           std::span<const Complex> observer_poles);

/// Closed-loop spectrum of the stacked linearized network. For rank-one
/// gains the analytic multiset is cross-checked against the direct
/// eigendecomposition; a mismatch beyond 1e-7 throws InconsistentSpectra
/// when `strict`.
ClosedLoopSpectrum closed_loop_spectrum(const CompanionSystem& cs,
                                        const ConsensusGain& gain,
                                        const Matrix& laplacian,
                                        bool strict = true);

/// Compares two spectra cluster by cluster: multiplicities must match and
/// cluster centroids must agree. Returns +inf on a multiplicity mismatch.
double spectrum_mismatch(const Spectrum& a, const Spectrum& b);

/// LQR consensus gain K = R b^T P for identical linear agents, with P the
/// stabilizing solution of P a + a^T P + q - P b R b^T P = 0.
Matrix linear_consensus_gain(const Matrix& a, const Matrix& b, const Matrix& q,
                             const Matrix& r_weight);

}  // namespace synthesis
}  // namespace hetcons
