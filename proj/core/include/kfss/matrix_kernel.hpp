#pragma once

// Dense small-matrix numerics shared by the selector and the bound engine:
// spectral summaries, PSD ordering, Lyapunov and Riccati solvers, rank-one
// inverse updates and the PBH feasibility tests. Matrices here are n <= ~20.

#include <Eigen/Dense>

#include <optional>
#include <span>

#include "kfss/error.hpp"

namespace kfss {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;

namespace tol {
// Relative fixed-point change that ends a Riccati/Lyapunov iteration.
inline constexpr double kDare = 1e-12;
// Max-abs residual a converged solution must satisfy, scaled by
// max(1, max_abs(Sigma)) so large covariances are not held below roundoff.
inline constexpr double kDareResidual = 1e-9;
inline constexpr int kDareMaxIterations = 100000;
inline constexpr double kStabilityMargin = 1e-9;
inline constexpr double kPsd = 1e-10;
inline constexpr double kPd = 1e-12;
inline constexpr double kSymmetry = 1e-10;
inline constexpr double kSingularUpdate = 1e-12;
inline constexpr double kPbhRank = 1e-8;
}  // namespace tol

struct SpectralSummary {
  double sigma_max = 0.0;
  double sigma_min = 0.0;
  // Present only for inputs symmetric within tol::kSymmetry.
  std::optional<double> lambda_max;
  std::optional<double> lambda_min;
  double spectral_norm = 0.0;
  double trace = 0.0;
};

struct SolveDiagnostics {
  int iterations = 0;
  double residual = 0.0;
  bool converged = false;
};

struct CovarianceSolution {
  Matrix sigma;
  SolveDiagnostics diagnostics;
};

enum class DareMethod {
  // Structure-preserving doubling followed by measurement-update polishing.
  kDoubling,
  // Plain measurement-update fixed point from Sigma_0 = W.
  kFixedPoint,
};

struct DareOptions {
  DareMethod method = DareMethod::kDoubling;
  // Skip the PBH/definiteness pre-checks when the caller already validated
  // (A, W, sensors), e.g. inside a cost evaluator over a built model.
  bool check_feasibility = true;
  int max_iterations = tol::kDareMaxIterations;
};

enum class PsdOrdering { kGreaterEqual, kLessEqual, kEqual, kIncomparable };

// ---- predicates and small helpers ----

bool all_finite(const Matrix& m);
double max_abs(const Matrix& m);
bool is_symmetric(const Matrix& m, double rel_tol = tol::kSymmetry);
Matrix symmetrize(const Matrix& m);
double spectral_radius(const Matrix& a);
/// Smallest eigenvalue of the symmetric part of `m`.
double min_eigenvalue(const Matrix& m);
double max_eigenvalue(const Matrix& m);
/// PSD with smallest eigenvalue >= -tol::kPsd * max(1, ||m||_2).
bool is_psd(const Matrix& m);
/// Positive definite: smallest eigenvalue > tol::kPd * max(1, ||m||_2).
bool is_positive_definite(const Matrix& m);
/// Symmetric PSD square root via eigendecomposition (negative noise clipped).
Matrix symmetric_sqrt(const Matrix& m);
Matrix spd_inverse(const Matrix& m);

/// PBH test: rank [lambda I - A; C] = n for every eigenvalue |lambda| >= 1.
bool is_detectable(const Matrix& a, const Matrix& c);
/// PBH test: rank [lambda I - A, B] = n for every eigenvalue |lambda| >= 1.
bool is_stabilizable(const Matrix& a, const Matrix& b);

// ---- operations ----

SpectralSummary spectral_summary(const Matrix& m);

/// Solves Sigma = A Sigma A^T + W for Schur-stable A (Smith doubling).
CovarianceSolution solve_discrete_lyapunov(const Matrix& a, const Matrix& w);

/// Steady-state a-priori covariance: the fixed point of
///   Sigma = W + A (Sigma^-1 + C^T V^-1 C)^-1 A^T.
/// Iterates the algebraically identical measurement-update form, which never
/// inverts Sigma. A zero-row C reduces to solve_discrete_lyapunov.
CovarianceSolution solve_dare(const Matrix& a, const Matrix& w, const Matrix& c,
                              const Matrix& v, const DareOptions& options = {});

/// Residual a converged `sigma` must meet: kDareResidual * max(1, max_abs(sigma)).
double residual_bound(const Matrix& sigma);

/// Max-abs residual of the information-form Riccati equation at `sigma`.
double dare_residual(const Matrix& a, const Matrix& w, const Matrix& c,
                     const Matrix& v, const Matrix& sigma);

/// (C + B)^-1 from C^-1 for a rank-one B:
///   C^-1 - g C^-1 B C^-1,  g = 1 / (1 + trace(C^-1 B)).
Matrix miller_rank_one_update(const Matrix& c_inv, const Matrix& b);

/// (A + sum_k B_k)^-1 by chaining miller_rank_one_update over rank-one terms.
Matrix miller_inverse(const Matrix& a_inv, std::span<const Matrix> rank_one_terms);

PsdOrdering psd_compare(const Matrix& x, const Matrix& y, double tolerance);

/// Nonsingular P with sigma_1(P A P^-1) < 1: P = X^{1/2}, X = A^T X A + I.
Matrix stabilizing_transform(const Matrix& a);

/// True when P is nonsingular and sigma_1(P A P^-1) < 1.
bool is_stabilizing_transform(const Matrix& a, const Matrix& p);

}  // namespace kfss
