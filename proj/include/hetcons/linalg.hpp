#pragma once

#include <complex>
#include <vector>

#include <Eigen/Dense>

#include "hetcons/errors.hpp"

namespace hetcons {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;
using RowVector = Eigen::RowVectorXd;
using Complex = std::complex<double>;

/// Eigenvalues with multiplicity. Nonreal values come in conjugate pairs.
using Spectrum = std::vector<Complex>;

/// Tolerances shared by the numerical kernels. Read through
/// numeric_settings(); override once at startup with set_numeric_settings().
struct NumericSettings {
  int max_dimension = 64;
  double eig_residual = 1e-7;
  double lyapunov_residual = 1e-10;
  double lyapunov_stability_margin = 1e-12;
  double care_residual = 1e-8;
  int care_max_iterations = 200;
  double pinv_rank = 1e-12;
  double conjugate_pair = 1e-9;
};

const NumericSettings& numeric_settings();
void set_numeric_settings(const NumericSettings& settings);

namespace linalg {

/// Frobenius norm. Every "norm(m)" in tolerance expressions means this.
double norm(const Matrix& m);

bool is_finite(const Matrix& m);
bool is_symmetric(const Matrix& m, double tol);

/// All eigenvalues of a real square matrix (Hessenberg reduction followed
/// by shifted QR, capped at 100 n^2 sweeps).
Spectrum eig(const Matrix& m);

/// Largest real part over eig(m).
double spectral_abscissa(const Matrix& m);

/// Solves a^T P + P a + q = 0 for symmetric P. `a` must be Hurwitz.
Matrix solve_lyapunov(const Matrix& a, const Matrix& q);

/// Stabilizing solution of a^T P + P a + q - P b r^{-1} b^T P = 0 by
/// Newton-Kleinman iteration.
Matrix solve_care(const Matrix& a, const Matrix& b, const Matrix& q,
                  const Matrix& r);

/// Right inverse pi^T (pi pi^T)^{-1} of a full-row-rank matrix.
Matrix right_pinv(const Matrix& pi);

/// Smallest singular value of a complex matrix.
double min_singular_value(const Eigen::MatrixXcd& m);

/// Pairs two multisets greedily by nearest neighbour and returns the largest
/// pair distance. Sizes must match.
double multiset_distance(const Spectrum& a, const Spectrum& b);

}  // namespace linalg
}  // namespace hetcons
