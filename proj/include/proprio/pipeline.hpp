#pragma once

#include <Eigen/Dense>
#include <string>
#include <vector>

#include "proprio/calibrate.hpp"
#include "proprio/config.hpp"
#include "proprio/controller.hpp"
#include "proprio/estimator.hpp"
#include "proprio/sysid.hpp"
#include "proprio/trial.hpp"

namespace proprio {

/// Excite each transmission in-air with a seeded multisine, fit the
/// four-state model, and precompute the augmented systems, Kalman gains
/// and LQR gains. One measurement model per transmission, built from the
/// two channels' calibration averaged (the stacked filter assumes the
/// axes share their sensor constants).
inline ModelFile identify(const ExperimentConfig& cfg,
                          const CalibrationFile& cal) {
  const double dt = cfg.dt();
  ModelFile model;
  model.dt = dt;
  model.seed = cfg.seed;
  model.weights = cfg.weights;

  const auto [Q, R] = build_cost(cfg.weights);

  for (std::size_t i = 0; i < 4; ++i) {
    const std::uint64_t ex_seed = derive_seed(cfg.seed, 1000 + i);
    const auto u = design_excitation(cfg.sysid_f_lo, cfg.sysid_f_hi,
                                     cfg.sysid_amplitude_v,
                                     cfg.sysid_duration_s, dt, ex_seed);
    ResponseDataset data;
    data.dt = dt;
    data.states.reserve(u.size());
    data.inputs.reserve(u.size());
    TransmissionState ts;
    for (const Eigen::Vector2d& uk : u) {
      data.states.push_back(ts.vec());
      data.inputs.push_back(uk);
      ts = step_transmission(ts, cfg.trans, cfg.kin, uk,
                             Eigen::Vector2d::Zero(), dt);
    }
    model.process[i] = fit_linear_model(data);
    model.process[i].seed = ex_seed;

    const ActuatorCalibration& cs = cal.legs[i][0];
    const ActuatorCalibration& cl = cal.legs[i][1];
    SensorParams sp = cfg.sensor;
    sp.dt = dt;
    sp.alpha = 0.5 * (cs.alpha + cl.alpha);
    const Eigen::Matrix2d N_H = 0.5 * (cs.N_H + cl.N_H);
    const Eigen::Matrix2d N_D = 0.5 * (cs.N_D + cl.N_D);
    model.measurement[i] = build_measurement_model(sp, N_H, N_D);

    model.augmented[i] =
        build_augmented_system(model.process[i], model.measurement[i]);
    model.kalman_gain[i] = compute_kalman_gain(model.augmented[i]);
    model.lqr_gain[i] = compute_lqr_gain(model.process[i], Q, R).L;
  }
  return model;
}

/// One validation point: normalized estimation or tracking errors at a
/// stride frequency in one environment.
struct ValidationPoint {
  double f_hz = 0.0;
  Environment env = Environment::in_air;
  double swing = 0.0;
  double lift = 0.0;
};

/// Estimator validation protocol: sinusoidal drive, gains zero, at each
/// grid frequency, in air and on ground. The drive amplitude scales as
/// 1/f so every trial excites the same peak tip velocity (the quantity
/// the encoders actually sense). Errors are estimate vs truth.
inline std::vector<ValidationPoint> validate_estimator(
    const ExperimentConfig& cfg, const ModelFile& model,
    const CalibrationFile& cal) {
  std::vector<ValidationPoint> points;
  const RobotState stance = settled_stance(cfg);
  const double f_ref = cfg.freq_list_hz.front();
  int idx = 0;
  for (Environment env : {Environment::in_air, Environment::on_ground}) {
    for (double f : cfg.freq_list_hz) {
      TrialSetup setup;
      setup.mode = TrialMode::estimator_only;
      setup.env = env;
      setup.gait = GaitParams::pronk_default();
      setup.gait.T = 1.0 / f;
      setup.drive_v = cfg.validation_drive_v * f_ref / f;
      setup.seed = derive_seed(cfg.seed, 2000 + static_cast<std::uint64_t>(idx));
      const TrialRecord rec = run_trial(cfg, model, cal, setup, &stance);
      points.push_back({f, env, rec.metrics.E_est_swing,
                        rec.metrics.E_est_lift});
      ++idx;
    }
  }
  return points;
}

/// Controller validation protocol: closed-loop trot tracking at the
/// configured validation shape, in air and on ground. Errors are estimate
/// vs reference.
inline std::vector<ValidationPoint> validate_controller(
    const ExperimentConfig& cfg, const ModelFile& model,
    const CalibrationFile& cal) {
  std::vector<ValidationPoint> points;
  const RobotState stance = settled_stance(cfg);
  int idx = 0;
  for (Environment env : {Environment::in_air, Environment::on_ground}) {
    for (double f : cfg.freq_list_hz) {
      TrialSetup setup;
      setup.mode = TrialMode::closed_loop;
      setup.env = env;
      setup.gait = GaitParams::trot_default();
      setup.gait.A_S_um = cfg.trot_A_S_um;
      setup.gait.A_L_um = cfg.trot_A_L_um;
      setup.gait.S1 = cfg.validation_s1;
      setup.gait.S2 = cfg.validation_s2;
      setup.gait.T = 1.0 / f;
      setup.seed = derive_seed(cfg.seed, 3000 + static_cast<std::uint64_t>(idx));
      const TrialRecord rec = run_trial(cfg, model, cal, setup, &stance);
      points.push_back({f, env, rec.metrics.E_cont_swing,
                        rec.metrics.E_cont_lift});
      ++idx;
    }
  }
  return points;
}

}  // namespace proprio
