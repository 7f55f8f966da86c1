#pragma once

#include <Eigen/Cholesky>
#include <Eigen/Dense>
#include <Eigen/Eigenvalues>
#include <cmath>

#include "proprio/errors.hpp"

namespace proprio {

/// Discrete-time algebraic Riccati problem
///   X = A'XA - A'XB (R + B'XB)^-1 B'XA + Q
/// in the control form. The filter covariance is obtained by passing the
/// dual problem (A', H', W, N).
struct DareProblem {
  Eigen::MatrixXd A;  // n x n
  Eigen::MatrixXd B;  // n x m
  Eigen::MatrixXd Q;  // n x n, symmetric PSD
  Eigen::MatrixXd R;  // m x m, symmetric PD
};

inline double spectral_radius(const Eigen::MatrixXd& M) {
  if (M.rows() != M.cols()) {
    throw DimensionMismatch("spectral_radius: matrix must be square");
  }
  if (M.size() == 0) {
    throw DimensionMismatch("spectral_radius: empty matrix");
  }
  if (!M.allFinite()) {
    throw NonFinite("spectral_radius: non-finite entries");
  }
  Eigen::EigenSolver<Eigen::MatrixXd> es(M, /*computeEigenvectors=*/false);
  return es.eigenvalues().cwiseAbs().maxCoeff();
}

/// Frobenius norm of the Riccati map residual at X.
inline double dare_residual(const DareProblem& p, const Eigen::MatrixXd& X) {
  const Eigen::MatrixXd BtXB = p.R + p.B.transpose() * X * p.B;
  Eigen::LDLT<Eigen::MatrixXd> ldlt(BtXB);
  if (ldlt.info() != Eigen::Success) {
    throw IllConditioned("dare_residual: R + B'XB not factorizable");
  }
  const Eigen::MatrixXd AtXB = p.A.transpose() * X * p.B;
  const Eigen::MatrixXd map =
      p.A.transpose() * X * p.A - AtXB * ldlt.solve(AtXB.transpose()) + p.Q;
  return (map - X).norm();
}

namespace detail {

inline void check_dare_problem(const DareProblem& p) {
  const auto n = p.A.rows();
  const auto m = p.B.cols();
  if (p.A.cols() != n || p.B.rows() != n || p.Q.rows() != n ||
      p.Q.cols() != n || p.R.rows() != m || p.R.cols() != m || n == 0 ||
      m == 0) {
    throw DimensionMismatch("solve_dare: inconsistent matrix dimensions");
  }
  if (!p.A.allFinite() || !p.B.allFinite() || !p.Q.allFinite() ||
      !p.R.allFinite()) {
    throw NonFinite("solve_dare: non-finite input");
  }
  const double qscale = std::max(1.0, p.Q.norm());
  if ((p.Q - p.Q.transpose()).norm() > 1e-9 * qscale) {
    throw DimensionMismatch("solve_dare: Q not symmetric");
  }
  const double rscale = std::max(1.0, p.R.norm());
  if ((p.R - p.R.transpose()).norm() > 1e-9 * rscale) {
    throw DimensionMismatch("solve_dare: R not symmetric");
  }
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> qeig(
      0.5 * (p.Q + p.Q.transpose()), Eigen::EigenvaluesOnly);
  if (qeig.info() != Eigen::Success ||
      qeig.eigenvalues().minCoeff() < -1e-10 * qscale) {
    throw IllConditioned("solve_dare: Q not positive semidefinite");
  }
  Eigen::LLT<Eigen::MatrixXd> rllt(p.R);
  if (rllt.info() != Eigen::Success) {
    throw IllConditioned("solve_dare: R not positive definite");
  }
}

}  // namespace detail

/// Solves the DARE by the structure-preserving doubling iteration with
/// per-step symmetrization. Sizes here are tiny (n <= 6), so the dense
/// doubling recurrence is both the simplest and the fastest option.
inline Eigen::MatrixXd solve_dare(const DareProblem& p, double tol = 1e-10,
                                  int max_iter = 10000) {
  detail::check_dare_problem(p);
  const auto n = p.A.rows();
  const Eigen::MatrixXd I = Eigen::MatrixXd::Identity(n, n);

  Eigen::LLT<Eigen::MatrixXd> rllt(p.R);
  Eigen::MatrixXd Ak = p.A;
  Eigen::MatrixXd Gk = p.B * rllt.solve(p.B.transpose());
  Eigen::MatrixXd Hk = p.Q;

  for (int iter = 0; iter < max_iter; ++iter) {
    if (dare_residual(p, Hk) <= tol) {
      // Clamp symmetry drift before handing the solution out.
      return 0.5 * (Hk + Hk.transpose());
    }
    Eigen::PartialPivLU<Eigen::MatrixXd> lu(I + Gk * Hk);
    if (std::abs(lu.determinant()) < 1e-300) {
      throw IllConditioned("solve_dare: I + G*H singular during doubling");
    }
    const Eigen::MatrixXd W1 = lu.solve(Ak);        // (I + G H)^-1 A
    const Eigen::MatrixXd W2 = lu.solve(Gk);        // (I + G H)^-1 G
    const Eigen::MatrixXd HA = Hk * Ak;
    Gk = Gk + Ak * W2 * Ak.transpose();
    Hk = Hk + W1.transpose() * HA;
    Ak = Ak * W1;
    Gk = 0.5 * (Gk + Gk.transpose());
    Hk = 0.5 * (Hk + Hk.transpose());
    if (!Hk.allFinite() || !Gk.allFinite() || !Ak.allFinite()) {
      throw NonConvergence("solve_dare: iteration diverged");
    }
  }
  throw NonConvergence("solve_dare: residual above tolerance after max_iter");
}

}  // namespace proprio
