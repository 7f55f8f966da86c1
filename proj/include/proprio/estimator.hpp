#pragma once

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>

#include "proprio/dare.hpp"
#include "proprio/errors.hpp"
#include "proprio/plant.hpp"
#include "proprio/sensor.hpp"
#include "proprio/sysid.hpp"

namespace proprio {

using Matrix6d = Eigen::Matrix<double, 6, 6>;
using Vector6d = Eigen::Matrix<double, 6, 1>;
using KalmanGain = Eigen::Matrix<double, 6, 4>;

/// Six-state transmission-sensor system. The state appends the previous
/// step's two velocities to the process state; the measurement stacks the
/// current and previous V_m of both axes and the input stacks the current
/// and previous voltage pairs, u = [V_s_k, V_l_k, V_s_{k-1}, V_l_{k-1}].
struct AugmentedSystem {
  Matrix6d A = Matrix6d::Zero();
  Eigen::Matrix<double, 6, 4> B = Eigen::Matrix<double, 6, 4>::Zero();
  Eigen::Matrix<double, 4, 6> H = Eigen::Matrix<double, 4, 6>::Zero();
  Eigen::Matrix4d D = Eigen::Matrix4d::Zero();
  Matrix6d W = Matrix6d::Zero();
  Eigen::Matrix4d N = Eigen::Matrix4d::Zero();
};

/// Assembles the augmented system from the identified process model and
/// one measurement model shared by the transmission's two sensors.
inline AugmentedSystem build_augmented_system(const ProcessModel& proc,
                                              const MeasurementModel& meas) {
  AugmentedSystem s;
  s.A.topLeftCorner<4, 4>() = proc.A_p;
  // Delayed-velocity selector rows: rows 5 and 6 copy qdot_s and qdot_l.
  s.A(4, 1) = 1.0;
  s.A(5, 3) = 1.0;

  s.B.topLeftCorner<4, 2>() = proc.B_p;

  const double h11 = meas.H_m(0, 1);
  const double h22 = meas.H_m(1, 2);
  s.H(0, 1) = h11;
  s.H(1, 3) = h11;
  s.H(2, 4) = h22;
  s.H(3, 5) = h22;

  const double d11 = meas.D_m(0, 0), d12 = meas.D_m(0, 1);
  const double d21 = meas.D_m(1, 0), d22 = meas.D_m(1, 1);
  s.D << d11, 0, d12, 0,  //
      0, d11, 0, d12,     //
      d21, 0, d22, 0,     //
      0, d21, 0, d22;

  s.W.topLeftCorner<4, 4>() = proc.W_p;
  s.N.topLeftCorner<2, 2>() = meas.N_m;
  s.N.bottomRightCorner<2, 2>() = meas.N_m;
  return s;
}

namespace detail {

// N regularized by 1e-12 * trace when a sensor channel is noiseless so the
// DARE stays solvable.
inline Eigen::Matrix4d regularized_noise(const Eigen::Matrix4d& N_in) {
  Eigen::Matrix4d N = N_in;
  Eigen::LLT<Eigen::Matrix4d> llt(N);
  if (llt.info() != Eigen::Success) {
    const double eps = 1e-12 * std::max(N.trace(), 1.0);
    N += eps * Eigen::Matrix4d::Identity();
  }
  return N;
}

// Magnitude of the steady-state covariance without measurements; sets the
// achievable absolute residual for the filter DARE.
inline double covariance_scale(const Matrix6d& A, const Matrix6d& W) {
  if (spectral_radius(A) >= 1.0) return std::max(1.0, W.norm());
  Matrix6d P = W;
  for (int i = 0; i < 200; ++i) P = A * P * A.transpose() + W;
  return std::max(1.0, P.norm());
}

inline Eigen::MatrixXd solve_filter_dare(const AugmentedSystem& sys,
                                         const Eigen::Matrix4d& N,
                                         double tol, int max_iter) {
  DareProblem dual;
  dual.A = sys.A.transpose();
  dual.B = sys.H.transpose();
  dual.Q = sys.W;
  dual.R = N;
  const double scale = std::max(
      {1.0, N.norm(), covariance_scale(sys.A, sys.W) * sys.A.squaredNorm()});
  return solve_dare(dual, tol * scale, max_iter);
}

}  // namespace detail

/// Infinite-horizon Kalman gain K = P H' (H P H' + N)^-1 with P from the
/// dual-form DARE. The tolerance is relative to the covariance magnitude.
inline KalmanGain compute_kalman_gain(const AugmentedSystem& sys,
                                      double tol = 1e-12,
                                      int max_iter = 10000) {
  const Eigen::Matrix4d N = detail::regularized_noise(sys.N);

  // PBH detectability check on the unstable eigenvalues of A.
  {
    Eigen::EigenSolver<Matrix6d> es(sys.A);
    for (int i = 0; i < 6; ++i) {
      const std::complex<double> lam = es.eigenvalues()(i);
      if (std::abs(lam) < 1.0 - 1e-9) continue;
      Eigen::Matrix<std::complex<double>, 10, 6> pbh;
      pbh.topRows<6>() =
          sys.A.cast<std::complex<double>>() -
          lam * Eigen::Matrix<std::complex<double>, 6, 6>::Identity();
      pbh.bottomRows<4>() = sys.H.cast<std::complex<double>>();
      Eigen::ColPivHouseholderQR<
          Eigen::Matrix<std::complex<double>, 10, 6>>
          qr(pbh);
      if (qr.rank() < 6) {
        throw Undetectable("compute_kalman_gain: (A, H) undetectable");
      }
    }
  }

  const Eigen::MatrixXd P = detail::solve_filter_dare(sys, N, tol, max_iter);

  const Eigen::Matrix4d S = sys.H * P * sys.H.transpose() + N;
  Eigen::LDLT<Eigen::Matrix4d> sldlt(S);
  if (sldlt.info() != Eigen::Success) {
    throw IllConditioned("compute_kalman_gain: innovation covariance");
  }
  const KalmanGain K =
      sldlt.solve(sys.H * P.transpose()).transpose();

  const Matrix6d closed =
      (Matrix6d::Identity() - K * sys.H) * sys.A;
  if (spectral_radius(closed) >= 1.0) {
    throw NonConvergence("compute_kalman_gain: estimator not asymptotically stable");
  }
  return K;
}

/// Steady-state posterior covariance implied by the dual-form DARE
/// solution P, i.e. (I - KH) P. Used by validation tooling.
inline Matrix6d posterior_covariance(const AugmentedSystem& sys) {
  const Eigen::Matrix4d N = detail::regularized_noise(sys.N);
  const Eigen::MatrixXd P = detail::solve_filter_dare(sys, N, 1e-12, 10000);
  const Eigen::Matrix4d S = sys.H * P * sys.H.transpose() + N;
  const KalmanGain K =
      S.ldlt().solve(sys.H * P.transpose()).transpose();
  return (Matrix6d::Identity() - K * sys.H) * P;
}

/// Constant-gain filter state. u and y history is kept here so callers
/// only hand over the freshly sampled pair each tick.
struct FilterState {
  Vector6d x_hat = Vector6d::Zero();
  Eigen::Vector2d u_prev = Eigen::Vector2d::Zero();
  Eigen::Vector2d u_prev2 = Eigen::Vector2d::Zero();
  Eigen::Vector2d vm_prev = Eigen::Vector2d::Zero();

  Eigen::Vector4d process_state() const { return x_hat.head<4>(); }
};

/// One fused predict-correct step:
///   x_hat_k = A x_hat + B u_prev + K (y - H (A x_hat + B u_prev) - D u).
/// No factorization happens here; everything but vector arithmetic is
/// precomputed.
inline Vector6d kalman_update(const Vector6d& x_hat,
                              const AugmentedSystem& sys,
                              const KalmanGain& K,
                              const Eigen::Vector4d& u_prev4,
                              const Eigen::Vector4d& u4,
                              const Eigen::Vector4d& y4) {
  if (!y4.allFinite() || !u4.allFinite()) {
    throw NonFinite("kalman_update: non-finite measurement");
  }
  const Vector6d pred = sys.A * x_hat + sys.B * u_prev4;
  return pred + K * (y4 - sys.H * pred - sys.D * u4);
}

/// Tick-level wrapper used by the control loop. The sampled voltage pair at
/// tick k is the hold value commanded at k-1, so the same freshly sampled
/// pair feeds both the process propagation and the feedthrough correction.
inline void filter_tick(FilterState& st, const AugmentedSystem& sys,
                        const KalmanGain& K, const Eigen::Vector2d& u_meas,
                        const Eigen::Vector2d& vm_meas) {
  Eigen::Vector4d u4;
  u4 << u_meas, st.u_prev;
  Eigen::Vector4d y4;
  y4 << vm_meas, st.vm_prev;
  st.x_hat = kalman_update(st.x_hat, sys, K, u4, u4, y4);
  st.u_prev2 = st.u_prev;
  st.u_prev = u_meas;
  st.vm_prev = vm_meas;
}

/// Maps the estimated actuator positions through the leg kinematics,
/// clamping to 1.5x the deflection box first; the polynomial map is not
/// trustworthy beyond it.
inline LegPose estimate_leg_pose(const FilterState& st,
                                 const KinematicsParams& kin) {
  const double lim = 1.5 * kin.q_max;
  const double q_s = std::clamp(st.x_hat(0), -lim, lim);
  const double q_l = std::clamp(st.x_hat(2), -lim, lim);
  return leg_kinematics(kin, q_s, q_l);
}

}  // namespace proprio
