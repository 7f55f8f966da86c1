#pragma once

#include <Eigen/Dense>
#include <algorithm>
#include <vector>

#include "proprio/dare.hpp"
#include "proprio/errors.hpp"
#include "proprio/sysid.hpp"

namespace proprio {

/// The three scalars parameterizing the diagonal LQR cost.
struct CostWeights {
  double k_p = 4e4;   // 1/mm^2
  double k_d = 2e-2;  // s^2/mm^2
  double k_u = 3e-4;  // 1/V^2
};

/// Q = diag(k_p, k_d, k_p, k_d), R = diag(k_u, k_u).
inline std::pair<Eigen::Matrix4d, Eigen::Matrix2d> build_cost(
    const CostWeights& w) {
  if (!(w.k_p > 0.0) || !(w.k_d > 0.0) || !(w.k_u > 0.0)) {
    throw NonPositiveWeight("build_cost: weights must be positive");
  }
  Eigen::Matrix4d Q = Eigen::Matrix4d::Zero();
  Q.diagonal() << w.k_p, w.k_d, w.k_p, w.k_d;
  Eigen::Matrix2d R = Eigen::Matrix2d::Zero();
  R.diagonal() << w.k_u, w.k_u;
  return {Q, R};
}

/// Tracking control law: u = u0 + u_t[k] + L (x_ref - x_hat), saturated to
/// the drive range. u_t is indexed modulo its length and may be empty.
struct ControlLaw {
  Eigen::Matrix<double, 2, 4> L = Eigen::Matrix<double, 2, 4>::Zero();
  Eigen::Vector2d u0 = Eigen::Vector2d::Zero();
  std::vector<Eigen::Vector2d> u_t;
  double v_min = -100.0;
  double v_max = 100.0;
};

inline ControlLaw compute_lqr_gain(const ProcessModel& proc,
                                   const Eigen::Matrix4d& Q,
                                   const Eigen::Matrix2d& R) {
  DareProblem p{proc.A_p, proc.B_p, Q, R};
  // The residual scales with the solution, so the absolute tolerance must
  // track the cost magnitude.
  const double tol = 1e-10 * std::max({1.0, Q.norm(), R.norm()});
  Eigen::MatrixXd S;
  try {
    S = solve_dare(p, tol);
  } catch (const NonConvergence&) {
    throw Unstabilizable("compute_lqr_gain: Riccati iteration diverged");
  }
  ControlLaw law;
  const Eigen::Matrix2d gram = R + proc.B_p.transpose() * S * proc.B_p;
  law.L = gram.ldlt().solve(proc.B_p.transpose() * S * proc.A_p);
  law.u0 = proc.u0;
  if (spectral_radius(proc.A_p - proc.B_p * law.L) >= 1.0) {
    throw Unstabilizable("compute_lqr_gain: closed loop not stable");
  }
  return law;
}

struct ControlOutput {
  Eigen::Vector2d u = Eigen::Vector2d::Zero();
  bool saturated = false;
};

inline ControlOutput control_step(const ControlLaw& law,
                                  const Eigen::Vector4d& x_ref,
                                  const Eigen::Vector4d& x_hat_p,
                                  std::size_t k) {
  Eigen::Vector2d u = law.u0 + law.L * (x_ref - x_hat_p);
  if (!law.u_t.empty()) u += law.u_t[k % law.u_t.size()];
  ControlOutput out;
  for (int i = 0; i < 2; ++i) {
    const double clamped = std::clamp(u(i), law.v_min, law.v_max);
    if (clamped != u(i)) out.saturated = true;
    out.u(i) = clamped;
  }
  return out;
}

/// Per-step least-squares inversion of the identified model along a
/// periodic reference: u_t[k] minimizes
///   || x_ref[k+1] - x0 - A (x_ref[k] - x0) - B u_t[k] ||^2.
inline std::vector<Eigen::Vector2d> feedforward_from_reference(
    const ProcessModel& proc, const std::vector<Eigen::Vector4d>& x_ref) {
  if (x_ref.empty()) {
    throw EmptyDataset("feedforward_from_reference: empty reference");
  }
  Eigen::ColPivHouseholderQR<Eigen::Matrix<double, 4, 2>> qr(proc.B_p);
  if (qr.rank() < 2) {
    throw RankDeficient("feedforward_from_reference: B has rank < 2");
  }
  const std::size_t n = x_ref.size();
  std::vector<Eigen::Vector2d> u_t(n);
  for (std::size_t k = 0; k < n; ++k) {
    const Eigen::Vector4d target = x_ref[(k + 1) % n] - proc.x0 -
                                   proc.A_p * (x_ref[k] - proc.x0);
    u_t[k] = qr.solve(target);
  }
  return u_t;
}

}  // namespace proprio
