#include "hetcons/linalg.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

#include <Eigen/Eigenvalues>
#include <Eigen/SVD>

namespace hetcons {
namespace {

NumericSettings g_settings;

void require_square(const Matrix& m, const char* what) {
  if (m.rows() != m.cols() || m.rows() < 1) {
    throw Error(ErrorCode::NonSquare,
                std::string(what) + ": expected a nonempty square matrix, got " +
                    std::to_string(m.rows()) + "x" + std::to_string(m.cols()));
  }
}

void require_finite(const Matrix& m, const char* what) {
  if (!linalg::is_finite(m)) {
    throw Error(ErrorCode::InvalidArgument,
                std::string(what) + ": matrix has non-finite entries");
  }
}

void require_dimension(Eigen::Index n, const char* what) {
  if (n > numeric_settings().max_dimension) {
    throw Error(ErrorCode::InvalidDimension,
                std::string(what) + ": dimension " + std::to_string(n) +
                    " exceeds the supported maximum of " +
                    std::to_string(numeric_settings().max_dimension));
  }
}

// Kronecker-vectorized solve of a^T P + P a + q = 0 with two rounds of
// iterative refinement. No stability or residual checks.
Matrix lyapunov_kron(const Matrix& a, const Matrix& q) {
  const Eigen::Index n = a.rows();
  const Eigen::Index n2 = n * n;
  const Matrix at = a.transpose();
  Matrix op = Matrix::Zero(n2, n2);
  // vec(a^T P) = (I kron a^T) vec(P), vec(P a) = (a^T kron I) vec(P),
  // with column-major vec.
  for (Eigen::Index blk = 0; blk < n; ++blk) {
    op.block(blk * n, blk * n, n, n) += at;
  }
  for (Eigen::Index i = 0; i < n; ++i) {
    for (Eigen::Index j = 0; j < n; ++j) {
      op.block(i * n, j * n, n, n).diagonal().array() += at(i, j);
    }
  }
  Eigen::PartialPivLU<Matrix> lu(op);
  if (!(lu.rcond() > 1e-14)) {
    throw Error(ErrorCode::SingularSystem,
                "solve_lyapunov: Kronecker system is numerically singular");
  }
  const Vector rhs = -Eigen::Map<const Vector>(q.data(), n2);
  Vector x = lu.solve(rhs);
  for (int pass = 0; pass < 2; ++pass) {
    x += lu.solve(rhs - op * x);
  }
  Matrix p = Eigen::Map<Matrix>(x.data(), n, n);
  return 0.5 * (p + p.transpose());
}

double min_symmetric_eigenvalue(const Matrix& m) {
  Eigen::SelfAdjointEigenSolver<Matrix> es(m, Eigen::EigenvaluesOnly);
  return es.eigenvalues().minCoeff();
}

// Stabilizing CARE solution from the sign of the Hamiltonian
// H = [a, -s; -q, -a^T], by the determinant-scaled Newton iteration. The
// stable invariant subspace is the kernel of sign(H) + I. Returns an empty
// matrix when the iteration stalls or the subspace is not a graph.
Matrix care_sign_function(const Matrix& a, const Matrix& s, const Matrix& q) {
  const Eigen::Index n = a.rows();
  Matrix z(2 * n, 2 * n);
  z << a, -s, -q, -a.transpose();
  bool converged = false;
  for (int iter = 0; iter < 100 && !converged; ++iter) {
    Eigen::PartialPivLU<Matrix> lu(z);
    if (!(lu.rcond() > 1e-15)) return {};
    const double c = std::pow(std::abs(lu.determinant()), -1.0 / static_cast<double>(2 * n));
    const double scale = std::isfinite(c) && c > 0.0 ? c : 1.0;
    const Matrix next = 0.5 * (scale * z + lu.inverse() / scale);
    converged = (next - z).norm() <= 1e-12 * next.norm();
    z = next;
  }
  if (!converged || !z.allFinite()) return {};
  const Matrix ident = Matrix::Identity(n, n);
  Matrix lhs(2 * n, n), rhs(2 * n, n);
  lhs << z.topRightCorner(n, n), z.bottomRightCorner(n, n) + ident;
  rhs << z.topLeftCorner(n, n) + ident, z.bottomLeftCorner(n, n);
  const Matrix p = -lhs.colPivHouseholderQr().solve(rhs);
  if (!p.allFinite()) return {};
  return 0.5 * (p + p.transpose());
}

}  // namespace

const NumericSettings& numeric_settings() { return g_settings; }

void set_numeric_settings(const NumericSettings& settings) {
  g_settings = settings;
}

namespace linalg {

double norm(const Matrix& m) { return m.norm(); }

bool is_finite(const Matrix& m) { return m.allFinite(); }

bool is_symmetric(const Matrix& m, double tol) {
  return m.rows() == m.cols() && (m - m.transpose()).cwiseAbs().maxCoeff() <= tol;
}

Spectrum eig(const Matrix& m) {
  require_square(m, "eig");
  require_dimension(m.rows(), "eig");
  require_finite(m, "eig");
  const Eigen::Index n = m.rows();
  Eigen::EigenSolver<Matrix> es;
  es.setMaxIterations(100 * n * n);
  es.compute(m, /*computeEigenvectors=*/false);
  if (es.info() != Eigen::Success) {
    throw Error(ErrorCode::ConvergenceFailure,
                "eig: QR iteration did not converge within " +
                    std::to_string(100 * n * n) + " iterations");
  }
  const auto& values = es.eigenvalues();
  return Spectrum(values.data(), values.data() + values.size());
}

double spectral_abscissa(const Matrix& m) {
  double best = -std::numeric_limits<double>::infinity();
  for (const Complex& z : eig(m)) best = std::max(best, z.real());
  return best;
}

Matrix solve_lyapunov(const Matrix& a, const Matrix& q) {
  require_square(a, "solve_lyapunov");
  require_square(q, "solve_lyapunov");
  require_dimension(a.rows(), "solve_lyapunov");
  require_finite(a, "solve_lyapunov");
  require_finite(q, "solve_lyapunov");
  if (q.rows() != a.rows()) {
    throw Error(ErrorCode::DimensionMismatch,
                "solve_lyapunov: q must have the same dimension as a");
  }
  const double qnorm = std::max(1.0, norm(q));
  if (!is_symmetric(q, 1e-12 * qnorm)) {
    throw Error(ErrorCode::InvalidArgument, "solve_lyapunov: q is not symmetric");
  }
  const NumericSettings& ns = numeric_settings();
  if (spectral_abscissa(a) >= -ns.lyapunov_stability_margin) {
    throw Error(ErrorCode::UnstableA,
                "solve_lyapunov: a has an eigenvalue with nonnegative real part");
  }
  const Matrix qs = 0.5 * (q + q.transpose());
  Matrix p = lyapunov_kron(a, qs);
  const double residual = norm(a.transpose() * p + p * a + qs);
  if (residual > ns.lyapunov_residual * qnorm) {
    throw Error(ErrorCode::SingularSystem,
                "solve_lyapunov: residual " + std::to_string(residual) +
                    " exceeds bound; system too ill-conditioned");
  }
  return p;
}

Matrix solve_care(const Matrix& a, const Matrix& b, const Matrix& q,
                  const Matrix& r) {
  require_square(a, "solve_care");
  require_square(q, "solve_care");
  require_square(r, "solve_care");
  require_dimension(a.rows(), "solve_care");
  for (const Matrix* m : {&a, &b, &q, &r}) require_finite(*m, "solve_care");
  const Eigen::Index n = a.rows();
  if (b.rows() != n || q.rows() != n || r.rows() != b.cols()) {
    throw Error(ErrorCode::DimensionMismatch,
                "solve_care: inconsistent dimensions of a, b, q, r");
  }
  const double qnorm = std::max(1.0, norm(q));
  if (!is_symmetric(q, 1e-12 * qnorm) ||
      min_symmetric_eigenvalue(0.5 * (q + q.transpose())) < -1e-10 * qnorm) {
    throw Error(ErrorCode::InvalidArgument,
                "solve_care: q must be symmetric positive semidefinite");
  }
  Eigen::LLT<Matrix> r_llt(0.5 * (r + r.transpose()));
  if (!is_symmetric(r, 1e-12 * std::max(1.0, norm(r))) ||
      r_llt.info() != Eigen::Success) {
    throw Error(ErrorCode::InvalidArgument,
                "solve_care: r must be symmetric positive definite");
  }
  const NumericSettings& ns = numeric_settings();
  const Matrix qs = 0.5 * (q + q.transpose());
  const Matrix r_inv = r_llt.solve(Matrix::Identity(r.rows(), r.cols()));
  const Matrix s = b * r_inv * b.transpose();
  const Matrix ident = Matrix::Identity(n, n);

  // Preferred start: the sign-function solution, refined by Newton below.
  Matrix p = care_sign_function(a, s, qs);
  Matrix k;
  if (p.size() != 0) {
    k = r_inv * b.transpose() * p;
    if (spectral_abscissa(a - b * k) >= 0.0) p.resize(0, 0);
  }
  if (p.size() == 0) {
    // Shifted-gramian bootstrap: with beta > max(0, -min Re eig(a)), the matrix
    // -(a + beta I) is Hurwitz, Z solves (a + beta I) Z + Z (a + beta I)^T =
    // 2 b r^{-1} b^T, and K0 = r^{-1} b^T Z^{-1} gives
    // (a - b K0) Z + Z (a - b K0)^T = -2 beta Z.
    double min_re = std::numeric_limits<double>::infinity();
    for (const Complex& z : eig(a)) min_re = std::min(min_re, z.real());
    const double beta = std::max(0.0, -min_re) + 1.0;
    Matrix z;
    try {
      z = lyapunov_kron(-(a + beta * ident).transpose(), 2.0 * s);
    } catch (const Error&) {
      throw Error(ErrorCode::NotStabilizable,
                  "solve_care: stabilizing bootstrap failed (singular gramian)");
    }
    Eigen::LLT<Matrix> z_llt(z);
    const double znorm = std::max(norm(z), std::numeric_limits<double>::min());
    if (z_llt.info() != Eigen::Success || min_symmetric_eigenvalue(z) <= 1e-13 * znorm) {
      throw Error(ErrorCode::NotStabilizable,
                  "solve_care: (a, b) is not controllable; bootstrap gramian is "
                  "singular");
    }
    k = r_inv * b.transpose() * z_llt.solve(ident);
    if (spectral_abscissa(a - b * k) >= 0.0) {
      throw Error(ErrorCode::NotStabilizable,
                  "solve_care: bootstrap gain does not stabilize (a, b)");
    }
  }

  const double bound = ns.care_residual * qnorm;
  double residual = std::numeric_limits<double>::infinity();
  const bool seeded = p.size() != 0;
  for (int iter = 0; iter < ns.care_max_iterations; ++iter) {
    const Matrix ak = a - b * k;
    if (spectral_abscissa(ak) >= 0.0) {
      throw Error(ErrorCode::ConvergenceFailure,
                  "solve_care: Newton iterate lost stability");
    }
    if (iter == 0 && !seeded) {
      p = lyapunov_kron(ak, qs + k.transpose() * r * k);
    } else {
      // Same Newton step written as a correction driven by the current
      // residual; avoids cancellation once P is large.
      const Matrix res = a.transpose() * p + p * a + qs - p * s * p;
      const Matrix delta = lyapunov_kron(ak, res);
      p += delta;
      p = 0.5 * (p + p.transpose());
    }
    residual = norm(a.transpose() * p + p * a + qs - p * s * p);
    if (residual <= bound) return p;
    k = r_inv * b.transpose() * p;
  }
  throw Error(ErrorCode::ConvergenceFailure,
              "solve_care: Newton-Kleinman residual " + std::to_string(residual) +
                  " above tolerance after " +
                  std::to_string(ns.care_max_iterations) + " iterations");
}

Matrix right_pinv(const Matrix& pi) {
  require_finite(pi, "right_pinv");
  if (pi.rows() < 1 || pi.rows() > pi.cols()) {
    throw Error(ErrorCode::RankDeficient,
                "right_pinv: need rows <= cols for a right inverse");
  }
  const Matrix gram = pi * pi.transpose();
  const double scale = pi.squaredNorm();
  if (!(scale > 0.0) ||
      min_symmetric_eigenvalue(gram) <= numeric_settings().pinv_rank * scale) {
    throw Error(ErrorCode::RankDeficient, "right_pinv: matrix is not full row rank");
  }
  return pi.transpose() * gram.ldlt().solve(Matrix::Identity(pi.rows(), pi.rows()));
}

double min_singular_value(const Eigen::MatrixXcd& m) {
  Eigen::JacobiSVD<Eigen::MatrixXcd> svd(m);
  return svd.singularValues().minCoeff();
}

double multiset_distance(const Spectrum& a, const Spectrum& b) {
  if (a.size() != b.size()) return std::numeric_limits<double>::infinity();
  std::vector<bool> used(b.size(), false);
  double worst = 0.0;
  for (const Complex& x : a) {
    std::size_t best = b.size();
    double best_d = std::numeric_limits<double>::infinity();
    for (std::size_t j = 0; j < b.size(); ++j) {
      if (used[j]) continue;
      const double d = std::abs(x - b[j]);
      if (d < best_d) {
        best_d = d;
        best = j;
      }
    }
    used[best] = true;
    worst = std::max(worst, best_d);
  }
  return worst;
}

}  // namespace linalg
}  // namespace hetcons
