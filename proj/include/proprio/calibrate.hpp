#pragma once

#include <Eigen/Dense>
#include <array>
#include <cmath>
#include <vector>

#include "proprio/config.hpp"
#include "proprio/model_io.hpp"
#include "proprio/plant.hpp"
#include "proprio/rng.hpp"
#include "proprio/sensor.hpp"

namespace proprio {

namespace detail {

// Symmetrized two-sample Toeplitz covariance of a scalar series:
// diag = variance, off-diagonal = lag-1 covariance.
inline Eigen::Matrix2d stacked_covariance(const std::vector<double>& x) {
  const std::size_t n = x.size();
  double mean = 0.0;
  for (double v : x) mean += v;
  mean /= static_cast<double>(n);
  double var = 0.0, lag1 = 0.0;
  for (std::size_t k = 0; k < n; ++k) {
    const double d = x[k] - mean;
    var += d * d;
    if (k + 1 < n) lag1 += d * (x[k + 1] - mean);
  }
  var /= static_cast<double>(n);
  lag1 /= static_cast<double>(n - 1);
  Eigen::Matrix2d m;
  m << var, lag1, lag1, var;
  return m;
}

}  // namespace detail

/// Zero-input measurement statistics followed by a per-actuator velocity
/// scaling fit over the operating frequencies. Mirrors the routine run
/// before every experiment: offsets come from the zero-input means and are
/// subtracted from all later measurements; alpha minimizes the squared
/// error between the mechanical current and the ground-truth velocity.
inline CalibrationFile calibrate(const ExperimentConfig& cfg,
                                 std::uint64_t seed) {
  const double dt = cfg.dt();
  CalibrationFile cal;
  cal.seed = seed;
  Rng rng = make_rng(seed);
  EncoderNoise noise{&rng, cfg.sigma_vm, cfg.sigma_v};
  SensorParams sp = cfg.sensor;
  sp.dt = dt;

  // Phase one: u = 0, robot at rest. 2 s of quiet data per channel.
  const int n_quiet = static_cast<int>(2.0 / dt);
  for (std::size_t leg = 0; leg < 4; ++leg) {
    for (std::size_t axis = 0; axis < 2; ++axis) {
      std::vector<double> vm, v;
      vm.reserve(static_cast<std::size_t>(n_quiet));
      v.reserve(static_cast<std::size_t>(n_quiet));
      for (int k = 0; k < n_quiet; ++k) {
        EncoderSample s = simulate_encoder(0.0, 0.0, 0.0, sp, &noise);
        vm.push_back(s.V_m + cfg.offset_vm);
        v.push_back(s.V + cfg.offset_v);
      }
      ActuatorCalibration& ch = cal.legs[leg][axis];
      double mean_vm = 0.0, mean_v = 0.0;
      for (double x : vm) mean_vm += x;
      for (double x : v) mean_v += x;
      ch.offset_vm = mean_vm / n_quiet;
      ch.offset_v = mean_v / n_quiet;
      ch.N_H = detail::stacked_covariance(vm);
      ch.N_D = detail::stacked_covariance(v);
    }
  }

  // Phase two: drive one transmission at a time through the stride-band
  // frequencies and regress the true tip velocity on the mechanical
  // current computed from offset-corrected measurements.
  for (std::size_t leg = 0; leg < 4; ++leg) {
    std::array<double, 2> num{0.0, 0.0}, den{0.0, 0.0};
    for (double f : cfg.freq_list_hz) {
      TransmissionState ts;
      Eigen::Vector2d cmd_prev = Eigen::Vector2d::Zero();
      Eigen::Vector2d cmd_prev2 = Eigen::Vector2d::Zero();
      std::array<double, 2> v_corr_prev{0.0, 0.0};
      const int n = static_cast<int>(1.0 / dt);
      const int skip = n / 5;
      for (int k = 0; k < n; ++k) {
        const std::array<double, 2> qd{ts.qd_s, ts.qd_l};
        for (std::size_t axis = 0; axis < 2; ++axis) {
          const ActuatorCalibration& ch = cal.legs[leg][axis];
          EncoderSample raw = simulate_encoder(qd[axis], cmd_prev(static_cast<Eigen::Index>(axis)),
                                               cmd_prev2(static_cast<Eigen::Index>(axis)), sp,
                                               &noise);
          raw.V_m += cfg.offset_vm;
          raw.V += cfg.offset_v;
          const EncoderSample corr{raw.V_m - ch.offset_vm,
                                   raw.V - ch.offset_v};
          const double v_dot = (corr.V - v_corr_prev[axis]) / dt;
          const double i_m = mechanical_current(corr, v_dot, sp);
          if (k >= skip) {
            num[axis] += i_m * qd[axis];
            den[axis] += i_m * i_m;
          }
          v_corr_prev[axis] = corr.V;
        }
        const double t = k * dt;
        const Eigen::Vector2d cmd(
            cfg.validation_drive_v * std::sin(2.0 * M_PI * f * t),
            -cfg.validation_drive_v * std::cos(2.0 * M_PI * f * t));
        ts = step_transmission(ts, cfg.trans, cfg.kin, cmd,
                               Eigen::Vector2d::Zero(), dt);
        cmd_prev2 = cmd_prev;
        cmd_prev = cmd;
      }
    }
    for (std::size_t axis = 0; axis < 2; ++axis) {
      if (!(den[axis] > 1e-9)) {
        throw InsufficientExcitation(
            "calibrate: no mechanical current on an actuator channel");
      }
      cal.legs[leg][axis].alpha = num[axis] / den[axis];
    }
  }

  return cal;
}

}  // namespace proprio
