#include "kfss/matrix_kernel.hpp"

#include <algorithm>
#include <cmath>
#include <complex>
#include <sstream>
#include <string>

namespace kfss {

namespace {

void require_finite(const Matrix& m, const char* name) {
  if (!all_finite(m)) {
    throw Error(ErrorCode::kNonFinite,
                std::string(name) + " contains NaN or Inf entries");
  }
}

void require_square(const Matrix& m, const char* name) {
  if (m.rows() != m.cols() || m.rows() == 0) {
    std::ostringstream os;
    os << name << " must be a non-empty square matrix, got " << m.rows() << "x"
       << m.cols();
    throw Error(ErrorCode::kDimensionMismatch, os.str());
  }
}

void require_same_dim(const Matrix& a, const Matrix& b, const char* what) {
  if (a.rows() != b.rows() || a.cols() != b.cols()) {
    throw Error(ErrorCode::kDimensionMismatch,
                std::string("dimension mismatch: ") + what);
  }
}

Eigen::VectorXd singular_values(const Matrix& m) {
  if (m.size() == 0) return Eigen::VectorXd();
  return Eigen::JacobiSVD<Matrix>(m).singularValues();
}

// Rank of the complex PBH pencil [lambda I - A; C] (or its transpose form),
// counting singular values above tol::kPbhRank * sigma_1.
Eigen::Index pbh_rank(const Eigen::MatrixXcd& pencil) {
  const Eigen::VectorXd sv = Eigen::JacobiSVD<Eigen::MatrixXcd>(pencil).singularValues();
  if (sv.size() == 0 || sv(0) == 0.0) return 0;
  const double threshold = tol::kPbhRank * sv(0);
  return (sv.array() > threshold).count();
}

// One measurement-update Riccati step:
//   W + A S A^T - A S C^T (C S C^T + V)^-1 C S A^T.
Matrix riccati_step(const Matrix& a, const Matrix& w, const Matrix& c,
                    const Matrix& v, const Matrix& sigma) {
  const Matrix as = a * sigma;
  const Matrix asct = as * c.transpose();
  const Matrix innovation = symmetrize(c * sigma * c.transpose() + v);
  Eigen::LLT<Matrix> llt(innovation);
  if (llt.info() != Eigen::Success) {
    throw Error(ErrorCode::kSingularCovariance,
                "innovation covariance C Sigma C^T + V lost positive definiteness");
  }
  Matrix next = w + as * a.transpose() - asct * llt.solve(asct.transpose());
  return symmetrize(next);
}

double relative_change(const Matrix& next, const Matrix& prev) {
  return max_abs(next - prev) / std::max(1.0, max_abs(next));
}

void check_dare_feasibility(const Matrix& a, const Matrix& w, const Matrix& c,
                            const Matrix& v) {
  if (!is_symmetric(w) || !is_positive_definite(w)) {
    throw Error(ErrorCode::kInfeasible, "W must be symmetric positive definite");
  }
  if (c.rows() > 0 && (!is_symmetric(v) || !is_positive_definite(v))) {
    throw Error(ErrorCode::kInfeasible,
                "V must be symmetric positive definite on the selected block");
  }
  if (!is_detectable(a, c)) {
    throw Error(ErrorCode::kInfeasible, "(A, C) is not detectable");
  }
  if (!is_stabilizable(a, symmetric_sqrt(w))) {
    throw Error(ErrorCode::kInfeasible, "(A, W^1/2) is not stabilizable");
  }
}

}  // namespace

bool all_finite(const Matrix& m) { return m.allFinite(); }

double max_abs(const Matrix& m) {
  return m.size() == 0 ? 0.0 : m.cwiseAbs().maxCoeff();
}

bool is_symmetric(const Matrix& m, double rel_tol) {
  if (m.rows() != m.cols()) return false;
  const double scale = std::max(1.0, max_abs(m));
  return max_abs(m - m.transpose()) <= rel_tol * scale;
}

Matrix symmetrize(const Matrix& m) { return 0.5 * (m + m.transpose()); }

double spectral_radius(const Matrix& a) {
  require_square(a, "A");
  if (a.rows() == 1) return std::abs(a(0, 0));
  Eigen::EigenSolver<Matrix> es(a, /*computeEigenvectors=*/false);
  return es.eigenvalues().cwiseAbs().maxCoeff();
}

double min_eigenvalue(const Matrix& m) {
  require_square(m, "matrix");
  if (m.rows() == 1) return m(0, 0);
  Eigen::SelfAdjointEigenSolver<Matrix> es(symmetrize(m), Eigen::EigenvaluesOnly);
  return es.eigenvalues()(0);
}

double max_eigenvalue(const Matrix& m) {
  require_square(m, "matrix");
  if (m.rows() == 1) return m(0, 0);
  Eigen::SelfAdjointEigenSolver<Matrix> es(symmetrize(m), Eigen::EigenvaluesOnly);
  return es.eigenvalues()(m.rows() - 1);
}

bool is_psd(const Matrix& m) {
  Eigen::SelfAdjointEigenSolver<Matrix> es(symmetrize(m), Eigen::EigenvaluesOnly);
  const auto& ev = es.eigenvalues();
  const double scale = std::max(1.0, ev.cwiseAbs().maxCoeff());
  return ev(0) >= -tol::kPsd * scale;
}

bool is_positive_definite(const Matrix& m) {
  Eigen::SelfAdjointEigenSolver<Matrix> es(symmetrize(m), Eigen::EigenvaluesOnly);
  const auto& ev = es.eigenvalues();
  const double scale = std::max(1.0, ev.cwiseAbs().maxCoeff());
  return ev(0) > tol::kPd * scale;
}

Matrix symmetric_sqrt(const Matrix& m) {
  Eigen::SelfAdjointEigenSolver<Matrix> es(symmetrize(m));
  const Vector roots = es.eigenvalues().cwiseMax(0.0).cwiseSqrt();
  return symmetrize(es.eigenvectors() * roots.asDiagonal() *
                    es.eigenvectors().transpose());
}

Matrix spd_inverse(const Matrix& m) {
  Eigen::LLT<Matrix> llt(symmetrize(m));
  if (llt.info() != Eigen::Success) {
    throw Error(ErrorCode::kSingularCovariance,
                "matrix is not positive definite; cannot invert");
  }
  return symmetrize(llt.solve(Matrix::Identity(m.rows(), m.cols())));
}

bool is_detectable(const Matrix& a, const Matrix& c) {
  require_square(a, "A");
  if (c.cols() != a.rows()) {
    throw Error(ErrorCode::kDimensionMismatch, "C must have n columns");
  }
  const Eigen::Index n = a.rows();
  Eigen::EigenSolver<Matrix> es(a, false);
  for (Eigen::Index k = 0; k < n; ++k) {
    const std::complex<double> lambda = es.eigenvalues()(k);
    if (std::abs(lambda) < 1.0 - tol::kStabilityMargin) continue;
    Eigen::MatrixXcd pencil(n + c.rows(), n);
    pencil.topRows(n) = lambda * Eigen::MatrixXcd::Identity(n, n) -
                        a.cast<std::complex<double>>();
    pencil.bottomRows(c.rows()) = c.cast<std::complex<double>>();
    if (pbh_rank(pencil) < n) return false;
  }
  return true;
}

bool is_stabilizable(const Matrix& a, const Matrix& b) {
  if (b.rows() != a.rows()) {
    throw Error(ErrorCode::kDimensionMismatch, "B must have n rows");
  }
  return is_detectable(a.transpose(), b.transpose());
}

SpectralSummary spectral_summary(const Matrix& m) {
  require_finite(m, "M");
  require_square(m, "M");
  SpectralSummary out;
  const Eigen::VectorXd sv = singular_values(m);
  out.sigma_max = sv(0);
  out.sigma_min = sv(sv.size() - 1);
  out.spectral_norm = out.sigma_max;
  out.trace = m.trace();
  if (is_symmetric(m)) {
    out.lambda_max = max_eigenvalue(m);
    out.lambda_min = min_eigenvalue(m);
  }
  return out;
}

CovarianceSolution solve_discrete_lyapunov(const Matrix& a, const Matrix& w) {
  require_finite(a, "A");
  require_finite(w, "W");
  require_square(a, "A");
  require_same_dim(a, w, "A and W");
  if (!is_symmetric(w) || !is_psd(w)) {
    throw Error(ErrorCode::kNotPositiveDefiniteW, "W must be symmetric PSD");
  }
  const double rho = spectral_radius(a);
  if (rho >= 1.0 - tol::kStabilityMargin) {
    std::ostringstream os;
    os << "spectral radius " << rho << " is not below 1";
    throw Error(ErrorCode::kUnstable, os.str());
  }

  // Smith doubling: S_{k+1} = S_k + A_k S_k A_k^T, A_{k+1} = A_k^2.
  CovarianceSolution out;
  Matrix sigma = symmetrize(w);
  Matrix ak = a;
  int iterations = 0;
  while (iterations < tol::kDareMaxIterations) {
    ++iterations;
    const Matrix term = ak * sigma * ak.transpose();
    sigma = symmetrize(sigma + term);
    ak = ak * ak;
    if (max_abs(term) <= tol::kDare * std::max(1.0, max_abs(sigma))) break;
  }
  // Polish on the defining equation so the residual is measured on a
  // fixed point of Sigma = A Sigma A^T + W rather than of the doubled form.
  for (int k = 0; k < 8 && iterations < tol::kDareMaxIterations; ++k) {
    ++iterations;
    const Matrix next = symmetrize(a * sigma * a.transpose() + w);
    const double change = relative_change(next, sigma);
    sigma = next;
    if (change <= tol::kDare) break;
  }
  out.diagnostics.iterations = iterations;
  out.diagnostics.residual = max_abs(sigma - a * sigma * a.transpose() - w);
  out.diagnostics.converged = out.diagnostics.residual <= residual_bound(sigma);
  if (!out.diagnostics.converged) {
    std::ostringstream os;
    os << "Lyapunov solve did not converge: residual " << out.diagnostics.residual;
    throw Error(ErrorCode::kNoConvergence, os.str());
  }
  out.sigma = std::move(sigma);
  return out;
}

double residual_bound(const Matrix& sigma) {
  return tol::kDareResidual * std::max(1.0, max_abs(sigma));
}

double dare_residual(const Matrix& a, const Matrix& w, const Matrix& c,
                     const Matrix& v, const Matrix& sigma) {
  // (Sigma^-1 + R)^-1 = L (I + L^T R L)^-1 L^T with Sigma = L L^T, which
  // evaluates the information form without forming Sigma^-1 explicitly.
  Eigen::LLT<Matrix> chol(symmetrize(sigma));
  if (chol.info() != Eigen::Success) {
    throw Error(ErrorCode::kSingularCovariance, "Sigma is not positive definite");
  }
  const Matrix l = chol.matrixL();
  const Eigen::Index n = sigma.rows();
  Matrix inner = Matrix::Identity(n, n);
  if (c.rows() > 0) {
    Eigen::LLT<Matrix> vllt(symmetrize(v));
    if (vllt.info() != Eigen::Success) {
      throw Error(ErrorCode::kSingularCovariance, "V is not positive definite");
    }
    const Matrix cl = c * l;
    inner += cl.transpose() * vllt.solve(cl);
  }
  const Matrix posterior =
      l * Eigen::LLT<Matrix>(symmetrize(inner)).solve(l.transpose());
  return max_abs(sigma - w - a * posterior * a.transpose());
}

CovarianceSolution solve_dare(const Matrix& a, const Matrix& w, const Matrix& c,
                              const Matrix& v, const DareOptions& options) {
  require_finite(a, "A");
  require_finite(w, "W");
  require_finite(c, "C");
  require_finite(v, "V");
  require_square(a, "A");
  require_same_dim(a, w, "A and W");
  const Eigen::Index n = a.rows();
  const Eigen::Index m = c.rows();
  if (c.cols() != n && m > 0) {
    throw Error(ErrorCode::kDimensionMismatch, "C must have n columns");
  }
  if (v.rows() != m || v.cols() != m) {
    throw Error(ErrorCode::kDimensionMismatch, "V must be (rows of C) square");
  }
  if (options.check_feasibility) {
    check_dare_feasibility(a, w, m > 0 ? c : Matrix(0, n), v);
  }
  if (m == 0) return solve_discrete_lyapunov(a, w);

  CovarianceSolution out;
  Matrix sigma;
  int iterations = 0;

  if (options.method == DareMethod::kDoubling) {
    // Structure-preserving doubling on the dual (control) form with
    // A0 = A^T, G0 = C^T V^-1 C, H0 = W; H_k converges to Sigma.
    Eigen::LLT<Matrix> vllt(symmetrize(v));
    if (vllt.info() != Eigen::Success) {
      throw Error(ErrorCode::kSingularCovariance, "V is not positive definite");
    }
    Matrix ak = a.transpose();
    Matrix g = symmetrize(c.transpose() * vllt.solve(c));
    Matrix h = symmetrize(w);
    const Matrix identity = Matrix::Identity(n, n);
    while (iterations < options.max_iterations) {
      ++iterations;
      const Eigen::PartialPivLU<Matrix> lu(identity + g * h);
      const Matrix v1 = lu.solve(ak);
      const Matrix v2 = lu.solve(g.transpose()).transpose();
      g = symmetrize(g + ak * v2 * ak.transpose());
      Matrix h_next = symmetrize(h + v1.transpose() * h * ak);
      ak = ak * v1;
      if (!h_next.allFinite()) {
        throw Error(ErrorCode::kNoConvergence, "doubling iteration diverged");
      }
      const double change = relative_change(h_next, h);
      h = std::move(h_next);
      if (change <= tol::kDare) break;
    }
    sigma = std::move(h);
  } else {
    sigma = symmetrize(w);
  }

  // Measurement-update fixed point. For the doubling path this only
  // polishes an already converged iterate.
  bool settled = false;
  while (iterations < options.max_iterations) {
    ++iterations;
    Matrix next = riccati_step(a, w, c, v, sigma);
    const double change = relative_change(next, sigma);
    sigma = std::move(next);
    if (change <= tol::kDare) {
      settled = true;
      break;
    }
  }

  out.diagnostics.iterations = iterations;
  out.diagnostics.residual = dare_residual(a, w, c, v, sigma);
  out.diagnostics.converged =
      settled && out.diagnostics.residual <= residual_bound(sigma);
  if (!out.diagnostics.converged) {
    std::ostringstream os;
    os << "Riccati iteration did not converge after " << iterations
       << " iterations (residual " << out.diagnostics.residual << ")";
    throw Error(ErrorCode::kNoConvergence, os.str());
  }
  out.sigma = std::move(sigma);
  return out;
}

Matrix miller_rank_one_update(const Matrix& c_inv, const Matrix& b) {
  require_finite(c_inv, "C^-1");
  require_finite(b, "B");
  require_square(c_inv, "C^-1");
  require_same_dim(c_inv, b, "C^-1 and B");
  const Eigen::VectorXd sv = singular_values(b);
  if (sv.size() > 1 && sv(1) > 1e-8 * std::max(sv(0), 1e-300)) {
    throw Error(ErrorCode::kNotRankOne, "update term B must have rank one");
  }
  const double denom = 1.0 + (c_inv * b).trace();
  if (std::abs(denom) <= tol::kSingularUpdate) {
    throw Error(ErrorCode::kSingularUpdate,
                "1 + trace(C^-1 B) vanishes; C + B is singular");
  }
  return c_inv - (c_inv * b * c_inv) / denom;
}

Matrix miller_inverse(const Matrix& a_inv, std::span<const Matrix> rank_one_terms) {
  Matrix current = a_inv;
  for (const Matrix& term : rank_one_terms) {
    current = miller_rank_one_update(current, term);
  }
  return current;
}

PsdOrdering psd_compare(const Matrix& x, const Matrix& y, double tolerance) {
  if (x.rows() != y.rows() || x.cols() != y.cols() || x.rows() != x.cols()) {
    throw Error(ErrorCode::kDimensionMismatch, "psd_compare needs equal square dims");
  }
  const Matrix diff = x - y;
  const bool x_ge_y = min_eigenvalue(diff) >= -tolerance;
  const bool y_ge_x = min_eigenvalue(-diff) >= -tolerance;
  if (x_ge_y && y_ge_x) return PsdOrdering::kEqual;
  if (x_ge_y) return PsdOrdering::kGreaterEqual;
  if (y_ge_x) return PsdOrdering::kLessEqual;
  return PsdOrdering::kIncomparable;
}

Matrix stabilizing_transform(const Matrix& a) {
  require_finite(a, "A");
  require_square(a, "A");
  const Eigen::Index n = a.rows();
  // X = A^T X A + I is the Lyapunov equation for the transposed dynamics.
  const CovarianceSolution x =
      solve_discrete_lyapunov(a.transpose(), Matrix::Identity(n, n));
  return symmetric_sqrt(x.sigma);
}

bool is_stabilizing_transform(const Matrix& a, const Matrix& p) {
  if (!p.allFinite() || p.rows() != a.rows() || p.cols() != a.cols()) return false;
  const Eigen::VectorXd sv = singular_values(p);
  if (sv(sv.size() - 1) <= 1e-12 * sv(0)) return false;
  const Matrix d = p * a * p.inverse();
  return singular_values(d)(0) < 1.0;
}

}  // namespace kfss
