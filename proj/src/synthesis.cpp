#include "hetcons/synthesis.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include <Eigen/SVD>
#include <unsupported/Eigen/KroneckerProduct>

namespace hetcons::synthesis {
namespace {

bool is_nonreal(const Complex& p) {
  return std::abs(p.imag()) > numeric_settings().conjugate_pair * std::max(1.0, std::abs(p));
}

void require_conjugate_closed(std::span<const Complex> poles) {
  std::vector<bool> used(poles.size(), false);
  for (std::size_t i = 0; i < poles.size(); ++i) {
    if (used[i] || !is_nonreal(poles[i])) continue;
    const double tol = numeric_settings().conjugate_pair * std::max(1.0, std::abs(poles[i]));
    bool matched = false;
    for (std::size_t j = 0; j < poles.size(); ++j) {
      if (j == i || used[j]) continue;
      if (std::abs(poles[j] - std::conj(poles[i])) <= tol) {
        used[i] = used[j] = true;
        matched = true;
        break;
      }
    }
    if (!matched) {
      throw Error(ErrorCode::NotConjugateClosed,
                  "pole set is not closed under complex conjugation");
    }
  }
}

void require_stable(std::span<const Complex> poles) {
  for (const Complex& p : poles) {
    if (!std::isfinite(p.real()) || !std::isfinite(p.imag()) || !(p.real() < -1e-9)) {
      throw Error(ErrorCode::UnstablePole,
                  "pole (" + std::to_string(p.real()) + ", " + std::to_string(p.imag()) +
                      ") does not have Re < -1e-9");
    }
  }
}

// Monic coefficients of prod (s - p_k), highest degree first, real parts.
std::vector<double> expand_monic(std::span<const Complex> poles) {
  std::vector<Complex> c{Complex(1.0, 0.0)};
  for (const Complex& p : poles) {
    std::vector<Complex> next(c.size() + 1, Complex(0.0, 0.0));
    for (std::size_t k = 0; k < c.size(); ++k) {
      next[k] += c[k];
      next[k + 1] -= p * c[k];
    }
    c = std::move(next);
  }
  std::vector<double> out(c.size());
  for (std::size_t k = 0; k < c.size(); ++k) {
    const double tol = 1e-9 * std::max(1.0, std::abs(c[k]));
    if (std::abs(c[k].imag()) > tol) {
      throw Error(ErrorCode::NotConjugateClosed,
                  "pole set does not expand to a real polynomial");
    }
    out[k] = c[k].real();
  }
  return out;
}

CompanionSystem build_companion(Vector b) {
  CompanionSystem cs;
  cs.r = static_cast<int>(b.size()) + 1;
  const int r = cs.r;
  cs.b = std::move(b);
  cs.A = Matrix::Zero(r, r);
  for (int k = 0; k + 1 < r; ++k) cs.A(k, k + 1) = 1.0;
  for (int j = 1; j < r; ++j) cs.A(r - 1, j) = -cs.b[j - 1];
  cs.B = Vector::Zero(r);
  cs.B[r - 1] = 1.0;
  cs.nu = Vector(r);
  cs.nu.head(r - 1) = cs.b;
  cs.nu[r - 1] = 1.0;
  return cs;
}

void require_positive(double value, const char* name) {
  if (!std::isfinite(value) || value <= 0.0) {
    throw Error(ErrorCode::NonPositiveParameter,
                std::string(name) + " must be finite and > 0");
  }
}

Matrix observability_matrix(const Matrix& a, const RowVector& c) {
  const int n = static_cast<int>(a.rows());
  Matrix o(n, n);
  RowVector row = c;
  for (int k = 0; k < n; ++k) {
    o.row(k) = row;
    row = row * a;
  }
  return o;
}

Matrix controllability_matrix(const Matrix& a, const Matrix& b) {
  const int n = static_cast<int>(a.rows());
  const int m = static_cast<int>(b.cols());
  Matrix w(n, n * m);
  Matrix block = b;
  for (int k = 0; k < n; ++k) {
    w.middleCols(k * m, m) = block;
    block = a * block;
  }
  return w;
}

double min_singular(const Matrix& m) {
  return Eigen::JacobiSVD<Matrix>(m).singularValues().minCoeff();
}

}  // namespace

CompanionSystem design_companion(std::span<const Complex> stable_poles) {
  if (stable_poles.empty()) {
    throw Error(ErrorCode::InvalidDimension, "design_companion: need at least one pole");
  }
  require_stable(stable_poles);
  require_conjugate_closed(stable_poles);
  // s * prod(s - p_k) = s^r + c_1 s^{r-1} + ... + c_{r-1} s, so b_k = c_{r-k+1}.
  const std::vector<double> c = expand_monic(stable_poles);
  const int r = static_cast<int>(stable_poles.size()) + 1;
  Vector b(r - 1);
  for (int k = 2; k <= r; ++k) b[k - 2] = c[r - k + 1];
  CompanionSystem cs = build_companion(std::move(b));
  cs.poles.assign(stable_poles.begin(), stable_poles.end());
  return cs;
}

CompanionSystem companion_from_coefficients(std::span<const double> b) {
  if (b.empty()) {
    throw Error(ErrorCode::InvalidDimension,
                "companion_from_coefficients: need at least b_2");
  }
  for (double v : b) {
    if (!std::isfinite(v)) {
      throw Error(ErrorCode::InvalidArgument,
                  "companion_from_coefficients: coefficients must be finite");
    }
  }
  // Nonzero roots solve s^{r-1} + b_r s^{r-2} + ... + b_2 = 0.
  const int d = static_cast<int>(b.size());
  Matrix reduced = Matrix::Zero(d, d);
  for (int k = 0; k + 1 < d; ++k) reduced(k, k + 1) = 1.0;
  for (int j = 0; j < d; ++j) reduced(d - 1, j) = -b[j];
  Spectrum roots = linalg::eig(reduced);
  require_stable(roots);
  CompanionSystem cs = build_companion(Eigen::Map<const Vector>(b.data(), d));
  cs.poles = std::move(roots);
  return cs;
}

ConsensusGain rank_one_gain(const CompanionSystem& cs, double mu, double q1,
                            double r_hat) {
  require_positive(mu, "mu");
  require_positive(q1, "q1");
  require_positive(r_hat, "r_hat");
  const double bt_nu = cs.B.dot(cs.nu);
  const double p1 = std::sqrt(q1) / (std::sqrt(r_hat) * bt_nu);
  ConsensusGain g;
  g.mu = mu;
  g.q1 = q1;
  g.r_hat = r_hat;
  g.K = mu * std::sqrt(q1 * r_hat) * cs.nu.transpose();
  g.P1 = cs.nu * p1 * cs.nu.transpose();
  g.Q1 = cs.nu * q1 * cs.nu.transpose();
  g.rank = GainRank::One;
  return g;
}

ConsensusGain full_gain(const CompanionSystem& cs, double mu, const Matrix& q1,
                        double r_hat) {
  require_positive(mu, "mu");
  require_positive(r_hat, "r_hat");
  if (q1.rows() != cs.r || q1.cols() != cs.r) {
    throw Error(ErrorCode::InvalidDimension, "full_gain: Q1 must be r x r");
  }
  ConsensusGain g;
  g.mu = mu;
  g.r_hat = r_hat;
  g.Q1 = q1;
  g.P1 = linalg::solve_care(cs.A, cs.B, q1, Matrix::Constant(1, 1, 1.0 / r_hat));
  g.K = mu * r_hat * (cs.B.transpose() * g.P1);
  g.rank = GainRank::Full;
  return g;
}

LocalController local_controller(const CompanionSystem& cs,
                                 const NormalFormAgent& agent) {
  if (agent.r < 1) {
    throw Error(ErrorCode::InvalidDimension, "local_controller: agent r must be >= 1");
  }
  if (agent.r > cs.r) {
    throw Error(ErrorCode::DegreeExceedsTarget,
                "agent '" + agent.name + "' has relative degree " +
                    std::to_string(agent.r) + " above the target " + std::to_string(cs.r));
  }
  const int ri = agent.r;
  const int m = cs.r - ri;
  LocalController lc;
  lc.agent_id = agent.id;
  lc.agent_r = ri;
  lc.D = Matrix::Zero(m, ri);
  lc.E = Matrix::Zero(m, m);
  lc.G = Vector::Zero(m);
  if (m == 0) {
    lc.F = RowVector::Zero(ri);
    for (int j = 1; j < ri; ++j) lc.F[j] = -cs.coefficient(j + 1);
    return lc;
  }
  // D: last row [0, -b_2, ..., -b_{r_i}].
  for (int j = 1; j < ri; ++j) lc.D(m - 1, j) = -cs.coefficient(j + 1);
  // E: shift structure, last row [-b_{r_i+1}, ..., -b_r].
  for (int k = 0; k + 1 < m; ++k) lc.E(k, k + 1) = 1.0;
  for (int j = 0; j < m; ++j) lc.E(m - 1, j) = -cs.coefficient(ri + 1 + j);
  lc.G[m - 1] = 1.0;
  return lc;
}

std::pair<Matrix, Vector> assembled_dynamics(const LocalController& lc) {
  const int ri = lc.agent_r;
  const int m = lc.order();
  const int n = ri + m;
  Matrix a = Matrix::Zero(n, n);
  Vector b = Vector::Zero(n);
  for (int k = 0; k + 1 < ri; ++k) a(k, k + 1) = 1.0;
  if (m == 0) {
    a.row(ri - 1) = lc.F;  // xi_r' = F xi + v
    b[ri - 1] = 1.0;
  } else {
    a(ri - 1, ri) = 1.0;  // xi_{r_i}' = phi_1
    a.block(ri, 0, m, ri) = lc.D;
    a.block(ri, ri, m, m) = lc.E;
    b.tail(m) = lc.G;
  }
  return {a, b};
}

Vector place_output_injection(const Matrix& A, const RowVector& C,
                              std::span<const Complex> poles) {
  const int n = static_cast<int>(A.rows());
  if (A.cols() != n || C.size() != n || static_cast<int>(poles.size()) != n) {
    throw Error(ErrorCode::InvalidDimension,
                "place_output_injection: need A n x n, C 1 x n and n poles");
  }
  require_conjugate_closed(poles);
  const Matrix o = observability_matrix(A, C);
  const double scale = std::max(1.0, linalg::norm(o));
  if (!(min_singular(o) > 1e-9 * scale)) {
    throw Error(ErrorCode::NotObservable, "(C, A) is not observable");
  }
  // phi(A) with phi the desired characteristic polynomial, by Horner.
  const std::vector<double> c = expand_monic(poles);
  Matrix phi = Matrix::Zero(n, n);
  for (double ck : c) phi = phi * A + ck * Matrix::Identity(n, n);
  Vector en = Vector::Zero(n);
  en[n - 1] = 1.0;
  const Vector m = phi * o.partialPivLu().solve(en);

  // Backward check: each requested pole is an eigenvalue of A - M C.
  const Matrix closed = A - m * C;
  const double tol = 1e-6 * std::max(1.0, linalg::norm(closed));
  for (const Complex& p : poles) {
    const Eigen::MatrixXcd shifted =
        closed.cast<Complex>() - p * Eigen::MatrixXcd::Identity(n, n);
    if (!m.allFinite() || linalg::min_singular_value(shifted) > tol) {
      throw Error(ErrorCode::PlacementFailure,
                  "output injection does not place the requested poles");
    }
  }
  return m;
}

ObserverGain observer_gain(const CompanionSystem& cs, const RowVector& C,
                           std::span<const Complex> observer_poles) {
  if (C.size() != cs.r || static_cast<int>(observer_poles.size()) != cs.r) {
    throw Error(ErrorCode::InvalidDimension,
                "observer_gain: C must have length r and there must be r poles");
  }
  require_stable(observer_poles);
  const Matrix o = observability_matrix(cs.A, C);
  if (!(min_singular(o) > 1e-9)) {
    throw Error(ErrorCode::NotObservable, "(C, A) is not observable");
  }
  return ObserverGain{C, place_output_injection(cs.A, C, observer_poles)};
}

double spectrum_mismatch(const Spectrum& a, const Spectrum& b) {
  if (a.size() != b.size()) return std::numeric_limits<double>::infinity();
  const std::size_t n = a.size() + b.size();
  if (n == 0) return 0.0;
  std::vector<Complex> pts(a.begin(), a.end());
  pts.insert(pts.end(), b.begin(), b.end());
  double radius = 1.0;
  for (const Complex& z : pts) radius = std::max(radius, std::abs(z));
  // Single-linkage radius wide enough to gather the eigenvalue clouds that
  // defective (Jordan) structure produces under rounding.
  radius *= 1e-2;

  std::vector<std::size_t> parent(n);
  std::iota(parent.begin(), parent.end(), 0);
  const auto find = [&](std::size_t i) {
    while (parent[i] != i) i = parent[i] = parent[parent[i]];
    return i;
  };
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = i + 1; j < n; ++j) {
      if (std::abs(pts[i] - pts[j]) <= radius) parent[find(i)] = find(j);
    }
  }
  std::vector<int> count_a(n, 0), count_b(n, 0);
  std::vector<Complex> sum_a(n), sum_b(n);
  for (std::size_t i = 0; i < n; ++i) {
    const std::size_t root = find(i);
    if (i < a.size()) {
      ++count_a[root];
      sum_a[root] += pts[i];
    } else {
      ++count_b[root];
      sum_b[root] += pts[i];
    }
  }
  double worst = 0.0;
  for (std::size_t k = 0; k < n; ++k) {
    if (count_a[k] != count_b[k]) return std::numeric_limits<double>::infinity();
    if (count_a[k] == 0) continue;
    const Complex ma = sum_a[k] / static_cast<double>(count_a[k]);
    const Complex mb = sum_b[k] / static_cast<double>(count_b[k]);
    worst = std::max(worst, std::abs(ma - mb) / std::max(1.0, std::abs(ma)));
  }
  return worst;
}

ClosedLoopSpectrum closed_loop_spectrum(const CompanionSystem& cs,
                                        const ConsensusGain& gain,
                                        const Matrix& laplacian, bool strict) {
  const int n = static_cast<int>(laplacian.rows());
  if (laplacian.cols() != n || n < 1) {
    throw Error(ErrorCode::NonSquare, "closed_loop_spectrum: Laplacian must be square");
  }
  if (gain.K.size() != cs.r) {
    throw Error(ErrorCode::DimensionMismatch,
                "closed_loop_spectrum: gain does not match the companion system");
  }
  ClosedLoopSpectrum out;
  const Matrix bk = cs.B * gain.K;
  const Matrix stacked = Eigen::kroneckerProduct(Matrix::Identity(n, n), cs.A).eval() -
                         Eigen::kroneckerProduct(laplacian, bk).eval();
  out.direct = linalg::eig(stacked);
  if (gain.rank != GainRank::One) {
    out.values = out.direct;
    return out;
  }

  const double c = gain.mu * std::sqrt(gain.q1.value_or(1.0) * gain.r_hat);
  const double bt_nu = cs.B.dot(cs.nu);
  const Spectrum graph_spectrum = linalg::eig(laplacian);
  const Spectrum a_spectrum = linalg::eig(cs.A);
  const double zero_tol = 1e-9 * std::max(1.0, linalg::norm(laplacian));
  // Drop the single eigenvalue of A closest to the origin.
  std::size_t zero_index = 0;
  for (std::size_t k = 1; k < a_spectrum.size(); ++k) {
    if (std::abs(a_spectrum[k]) < std::abs(a_spectrum[zero_index])) zero_index = k;
  }
  for (const Complex& gamma : graph_spectrum) {
    if (std::abs(gamma) <= zero_tol) {
      out.values.insert(out.values.end(), a_spectrum.begin(), a_spectrum.end());
      continue;
    }
    out.values.push_back(-c * gamma * bt_nu);
    for (std::size_t k = 0; k < a_spectrum.size(); ++k) {
      if (k != zero_index) out.values.push_back(a_spectrum[k]);
    }
  }
  out.mismatch = spectrum_mismatch(out.values, out.direct);
  out.consistent = out.mismatch <= 1e-7;
  if (strict && !out.consistent) {
    throw Error(ErrorCode::InconsistentSpectra,
                "analytic and direct closed-loop spectra disagree (mismatch " +
                    std::to_string(out.mismatch) + ")");
  }
  return out;
}

Matrix linear_consensus_gain(const Matrix& a, const Matrix& b, const Matrix& q,
                             const Matrix& r_weight) {
  const int n = static_cast<int>(a.rows());
  if (a.cols() != n || b.rows() != n || q.rows() != n || q.cols() != n ||
      r_weight.rows() != b.cols() || r_weight.cols() != b.cols()) {
    throw Error(ErrorCode::InvalidDimension, "linear_consensus_gain: inconsistent sizes");
  }
  const double scale = std::max(1.0, linalg::norm(a));
  for (const Complex& z : linalg::eig(a)) {
    if (std::abs(z.imag()) > 1e-9 * scale || z.real() > 1e-9 * scale) {
      throw Error(ErrorCode::InvalidArgument,
                  "linear_consensus_gain: spectrum of a must be real and nonpositive");
    }
  }
  const Matrix w = controllability_matrix(a, b);
  if (Eigen::JacobiSVD<Matrix>(w).singularValues()(n - 1) <=
      1e-9 * std::max(1.0, linalg::norm(w))) {
    throw Error(ErrorCode::NotStabilizable, "linear_consensus_gain: (a, b) not controllable");
  }
  // (q^{1/2}, a) observable iff the stacked [q; q a; ...] has full column rank.
  Matrix obs(n * n, n);
  Matrix block = q;
  for (int k = 0; k < n; ++k) {
    obs.middleRows(k * n, n) = block;
    block = block * a;
  }
  if (Eigen::JacobiSVD<Matrix>(obs).singularValues()(n - 1) <=
      1e-9 * std::max(1.0, linalg::norm(obs))) {
    throw Error(ErrorCode::NotObservable,
                "linear_consensus_gain: (q^{1/2}, a) not observable");
  }
  const Matrix p = linalg::solve_care(a, b, q, r_weight.inverse());
  return r_weight * b.transpose() * p;
}

}  // namespace hetcons::synthesis
