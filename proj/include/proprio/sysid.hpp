#pragma once

#include <Eigen/Dense>
#include <Eigen/Eigenvalues>
#include <cmath>
#include <complex>
#include <cstdint>
#include <iostream>
#include <limits>
#include <vector>

#include "proprio/dare.hpp"
#include "proprio/errors.hpp"
#include "proprio/rng.hpp"

namespace proprio {

/// Sampled excitation run of one transmission: full state (observable in
/// simulation) paired with the voltage that drove each interval.
struct ResponseDataset {
  std::vector<Eigen::Vector2d> inputs;   // V
  std::vector<Eigen::Vector4d> states;   // (q_s, qd_s, q_l, qd_l)
  double dt = 4e-4;

  std::size_t size() const { return states.size(); }
};

/// Identified discrete-time linear model of one transmission about its
/// operating point.
struct ProcessModel {
  Eigen::Matrix4d A_p = Eigen::Matrix4d::Zero();
  Eigen::Matrix<double, 4, 2> B_p = Eigen::Matrix<double, 4, 2>::Zero();
  Eigen::Matrix4d W_p = Eigen::Matrix4d::Zero();
  Eigen::Vector4d x0 = Eigen::Vector4d::Zero();
  Eigen::Vector2d u0 = Eigen::Vector2d::Zero();
  double dt = 4e-4;
  std::uint64_t seed = 0;  // excitation provenance

  Eigen::Vector4d predict(const Eigen::Vector4d& x,
                          const Eigen::Vector2d& u) const {
    return x0 + A_p * (x - x0) + B_p * (u - u0);
  }
};

/// Band-limited multisine with seeded random phases, normalized to the
/// requested peak amplitude. Each output channel gets independent phases.
inline std::vector<Eigen::Vector2d> design_excitation(double f_lo,
                                                      double f_hi,
                                                      double amplitude,
                                                      double duration,
                                                      double dt,
                                                      std::uint64_t seed) {
  if (!(f_lo > 0.0) || !(f_hi > f_lo) || f_hi > 0.5 / dt) {
    throw InvalidRange("design_excitation: need 0 < f_lo < f_hi <= Nyquist");
  }
  if (duration < 20.0 / f_lo) {
    throw InvalidRange("design_excitation: duration under 20 cycles of f_lo");
  }
  const auto n = static_cast<std::size_t>(std::llround(duration / dt));
  const double df = 1.0 / (static_cast<double>(n) * dt);
  Rng rng = make_rng(seed);
  std::uniform_real_distribution<double> phase(0.0, 2.0 * M_PI);

  std::vector<Eigen::Vector2d> u(n, Eigen::Vector2d::Zero());
  for (int axis = 0; axis < 2; ++axis) {
    std::vector<double> phases;
    std::vector<double> freqs;
    for (std::size_t k = 1; k * df <= f_hi; ++k) {
      const double f = static_cast<double>(k) * df;
      if (f < f_lo) continue;
      freqs.push_back(f);
      phases.push_back(phase(rng));
    }
    double peak = 0.0;
    std::vector<double> raw(n, 0.0);
    for (std::size_t i = 0; i < n; ++i) {
      const double t = static_cast<double>(i) * dt;
      double v = 0.0;
      for (std::size_t j = 0; j < freqs.size(); ++j) {
        v += std::cos(2.0 * M_PI * freqs[j] * t + phases[j]);
      }
      raw[i] = v;
      peak = std::max(peak, std::abs(v));
    }
    const double scale = peak > 0.0 ? amplitude / peak : 0.0;
    for (std::size_t i = 0; i < n; ++i) u[i](axis) = scale * raw[i];
  }
  return u;
}

/// One-step least-squares fit of the four-state linear model about the
/// dataset mean. W_p is the covariance of the one-step residuals. If the
/// fit comes out unstable its eigenvalues are shrunk radially to 0.999.
inline ProcessModel fit_linear_model(const ResponseDataset& data) {
  const std::size_t n = data.size();
  if (n < 100 || data.inputs.size() != n) {
    throw EmptyDataset("fit_linear_model: need >= 100 aligned samples");
  }
  Eigen::Vector4d x_mean = Eigen::Vector4d::Zero();
  Eigen::Vector2d u_mean = Eigen::Vector2d::Zero();
  for (std::size_t k = 0; k < n; ++k) {
    x_mean += data.states[k];
    u_mean += data.inputs[k];
  }
  x_mean /= static_cast<double>(n);
  u_mean /= static_cast<double>(n);

  // Centered regressors plus an intercept column; the intercept folds into
  // the fixed point below so the affine predictor is exact even when the
  // sample mean is not an equilibrium.
  const auto rows = static_cast<Eigen::Index>(n - 1);
  Eigen::MatrixXd Z(rows, 7);
  Eigen::MatrixXd Y(rows, 4);
  for (Eigen::Index k = 0; k < rows; ++k) {
    const auto ku = static_cast<std::size_t>(k);
    Z.block<1, 4>(k, 0) = (data.states[ku] - x_mean).transpose();
    Z.block<1, 2>(k, 4) = (data.inputs[ku] - u_mean).transpose();
    Z(k, 6) = 1.0;
    Y.row(k) = (data.states[ku + 1] - x_mean).transpose();
  }

  // Equilibrate columns; position, velocity and voltage scales differ by
  // orders of magnitude.
  Eigen::VectorXd col_scale(7);
  for (int j = 0; j < 7; ++j) {
    const double norm = Z.col(j).norm();
    col_scale(j) = norm > 0.0 ? norm : 1.0;
    Z.col(j) /= col_scale(j);
  }

  Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(Z);
  qr.setThreshold(1e-8);
  if (qr.rank() < 7) {
    throw RankDeficient("fit_linear_model: excitation not informative");
  }
  Eigen::MatrixXd theta = qr.solve(Y);  // 7 x 4, scaled
  const Eigen::MatrixXd resid = Y - Z * theta;
  for (int j = 0; j < 7; ++j) theta.row(j) /= col_scale(j);

  ProcessModel m;
  m.A_p = theta.topRows<4>().transpose();
  m.B_p = theta.middleRows<2>(4).transpose();
  m.u0 = u_mean;
  m.dt = data.dt;
  m.W_p = (resid.transpose() * resid) / static_cast<double>(rows);

  const double rho = spectral_radius(m.A_p);
  if (rho >= 1.0) {
    Eigen::EigenSolver<Eigen::Matrix4d> es(m.A_p);
    if (es.info() != Eigen::Success) {
      throw UnstableFit("fit_linear_model: unstable and not diagonalizable");
    }
    Eigen::Vector4cd lam = es.eigenvalues();
    for (int i = 0; i < 4; ++i) {
      const double mag = std::abs(lam(i));
      if (mag >= 1.0) lam(i) *= 0.999 / mag;
    }
    const Eigen::Matrix4cd V = es.eigenvectors();
    m.A_p = (V * lam.asDiagonal() * V.inverse()).real();
    std::clog << "fit_linear_model: shrunk unstable eigenvalues to 0.999\n";
  }

  const Eigen::Vector4d intercept = theta.row(6).transpose();
  m.x0 = x_mean + (Eigen::Matrix4d::Identity() - m.A_p)
                      .partialPivLu()
                      .solve(intercept);
  return m;
}

/// RMS of the horizon-step open-loop prediction error, normalized by the
/// RMS deviation of the targets from the model's fixed point.
inline double prediction_error(const ProcessModel& model,
                               const ResponseDataset& data, int horizon) {
  if (horizon < 1) throw InvalidRange("prediction_error: horizon >= 1");
  const std::size_t n = data.size();
  if (n == 0 || data.inputs.size() != n ||
      n <= static_cast<std::size_t>(horizon)) {
    throw EmptyDataset("prediction_error: dataset shorter than horizon");
  }
  double err2 = 0.0, ref2 = 0.0;
  for (std::size_t k = 0; k + static_cast<std::size_t>(horizon) < n; ++k) {
    Eigen::Vector4d x = data.states[k];
    for (int j = 0; j < horizon; ++j) {
      x = model.predict(x, data.inputs[k + static_cast<std::size_t>(j)]);
    }
    const auto kh = k + static_cast<std::size_t>(horizon);
    err2 += (x - data.states[kh]).squaredNorm();
    ref2 += (data.states[kh] - model.x0).squaredNorm();
  }
  if (ref2 == 0.0) {
    return err2 == 0.0 ? 0.0 : std::numeric_limits<double>::infinity();
  }
  return std::sqrt(err2 / ref2);
}

}  // namespace proprio
