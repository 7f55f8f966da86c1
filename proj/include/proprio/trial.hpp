#pragma once

#include <Eigen/Dense>
#include <array>
#include <cmath>
#include <optional>
#include <vector>

#include "proprio/calibrate.hpp"
#include "proprio/config.hpp"
#include "proprio/controller.hpp"
#include "proprio/estimator.hpp"
#include "proprio/gait.hpp"
#include "proprio/metrics.hpp"
#include "proprio/model_io.hpp"
#include "proprio/plant.hpp"
#include "proprio/rng.hpp"

namespace proprio {

enum class TrialMode {
  closed_loop,
  open_loop_coupled,
  open_loop_decoupled,
  estimator_only
};

enum class Environment { in_air, on_ground };

struct TrialSetup {
  int trial_id = 0;
  GaitParams gait;  // T is always used; the shape only for closed_loop
  TrialMode mode = TrialMode::closed_loop;
  Environment env = Environment::on_ground;
  std::uint64_t seed = 1;
  BaselineRms rms{};   // required by the open-loop modes
  int strides = 0;     // 0 = config default
  double drive_v = 0;  // estimator_only amplitude; 0 = config default
};

struct TrialRecord {
  MetricsRecord metrics;
  TrialTrace trace;
  BaselineRms commanded_rms;  // RMS of the commanded voltages, for baselines
};

/// Static stance under zero drive; every on-ground trial starts here. The
/// result depends only on the config, so sweeps compute it once.
inline RobotState settled_stance(const ExperimentConfig& cfg) {
  const double dt = cfg.dt();
  RobotState rs;
  rs.z_b = cfg.body.hip_drop;  // feet start at the surface height
  const std::optional<SurfaceModel> surface = cfg.surface;
  const PlantConfig plant = cfg.plant();
  const std::array<Eigen::Vector2d, 4> zero{
      Eigen::Vector2d::Zero(), Eigen::Vector2d::Zero(),
      Eigen::Vector2d::Zero(), Eigen::Vector2d::Zero()};
  const int settle = static_cast<int>(2.5 / dt);
  for (int k = 0; k < settle; ++k) {
    rs = step_robot(rs, plant, zero, surface, dt);
  }
  return rs;
}

namespace detail {

struct LegLoopState {
  FilterState filter;
  Eigen::Vector2d cmd_prev = Eigen::Vector2d::Zero();
  Eigen::Vector2d cmd_prev2 = Eigen::Vector2d::Zero();
  std::array<double, 2> v_corr_prev{0.0, 0.0};
};

// Quantize the stride period onto the control grid; Table-1 periods are
// not exact multiples of the 2.5 kHz tick.
inline std::size_t quantized_period(double T, double dt) {
  return static_cast<std::size_t>(std::llround(T / dt));
}

inline ReferenceTrajectory build_reference(const ExperimentConfig& cfg,
                                           const TrialSetup& setup,
                                           double T_eff, double dt,
                                           std::vector<Eigen::Vector2d>* drive) {
  GaitParams g = setup.gait;
  g.T = T_eff;
  switch (setup.mode) {
    case TrialMode::closed_loop: {
      ReferenceTrajectory ref =
          (g.gait == GaitKind::trot)
              ? spline_reference(keyframes_trot(g), T_eff, dt,
                                 cfg.knots_per_period)
              : spline_reference(keyframes_pronk(g), T_eff, dt,
                                 cfg.knots_per_period);
      ref.leg_phase = assign_leg_phases(g.gait);
      return ref;
    }
    case TrialMode::open_loop_coupled:
    case TrialMode::open_loop_decoupled: {
      const GaitKind matching = setup.mode == TrialMode::open_loop_coupled
                                    ? GaitKind::coupled_sine
                                    : GaitKind::decoupled_sine;
      SinusoidBaseline base =
          sinusoid_reference(matching, setup.rms, g.gait, T_eff, dt,
                             cfg.trans.static_gain());
      if (drive) *drive = base.drive;
      return base.ref;
    }
    case TrialMode::estimator_only: {
      // Elliptical voltage drive at the validation amplitude, gains zero.
      const double amp =
          setup.drive_v > 0.0 ? setup.drive_v : cfg.validation_drive_v;
      BaselineRms rms;
      rms.all = amp / std::sqrt(2.0);
      rms.swing = rms.lift = rms.all;
      SinusoidBaseline base =
          sinusoid_reference(GaitKind::coupled_sine, rms, g.gait, T_eff, dt,
                             cfg.trans.static_gain());
      if (drive) *drive = base.drive;
      return base.ref;
    }
  }
  throw ConfigError("build_reference: bad mode");
}

}  // namespace detail

/// Simulates one full loop (plant -> encoders -> filter -> controller ->
/// plant) at the control rate for the configured number of strides and
/// returns the trace plus metrics. Deterministic for a given seed.
inline TrialRecord run_trial(const ExperimentConfig& cfg,
                             const ModelFile& model,
                             const CalibrationFile& cal,
                             const TrialSetup& setup,
                             const RobotState* stance = nullptr) {
  const double dt = cfg.dt();
  const std::size_t period = detail::quantized_period(setup.gait.T, dt);
  if (period < 8) throw ConfigError("run_trial: stride period too short");
  const double T_eff = static_cast<double>(period) * dt;
  const int strides = setup.strides > 0 ? setup.strides : cfg.trial_strides;
  const std::size_t n_ticks =
      period * static_cast<std::size_t>(strides) + 1;

  std::vector<Eigen::Vector2d> drive;
  ReferenceTrajectory ref =
      detail::build_reference(cfg, setup, T_eff, dt, &drive);

  // Per-leg control laws. Everything is precomputed before the loop.
  std::array<ControlLaw, 4> laws;
  for (std::size_t i = 0; i < 4; ++i) {
    ControlLaw& law = laws[i];
    law.u0 = model.process[i].u0;
    law.v_min = cfg.v_min;
    law.v_max = cfg.v_max;
    if (setup.mode == TrialMode::closed_loop) {
      law.L = model.lqr_gain[i];
      law.u_t = feedforward_from_reference(model.process[i], ref.samples);
    } else {
      law.L.setZero();
      law.u_t = drive;  // voltage sinusoids act as pure feed-forward
    }
  }

  const PlantConfig plant = cfg.plant();
  SensorParams sp = cfg.sensor;
  sp.dt = dt;
  Rng rng = make_rng(setup.seed);
  EncoderNoise noise{&rng, cfg.sigma_vm, cfg.sigma_v};

  const bool on_ground = setup.env == Environment::on_ground;
  std::optional<SurfaceModel> surface;
  if (on_ground) surface = cfg.surface;

  RobotState rs;
  rs.z_b = cfg.body.hip_drop;
  if (on_ground) {
    rs = (stance != nullptr) ? *stance : settled_stance(cfg);
  }

  // In-air trials model the mounted rig: the transmissions run free and
  // the body stays put, which is exactly what zero contact coupling gives.
  auto advance = [&](const std::array<Eigen::Vector2d, 4>& cmds,
                     std::array<LegContactSnapshot, 4>* out_snap) {
    if (on_ground) {
      rs = step_robot(rs, plant, cmds, surface, dt, 1.0, out_snap);
      return;
    }
    for (std::size_t i = 0; i < 4; ++i) {
      rs.legs[i] = step_transmission(rs.legs[i], cfg.trans, cfg.kin, cmds[i],
                                     Eigen::Vector2d::Zero(), dt);
    }
    if (out_snap != nullptr) {
      *out_snap = robot_leg_snapshot(rs, plant, std::nullopt);
    }
  };

  TrialTrace tr;
  tr.dt = dt;
  tr.stride_samples = period;
  tr.transient_strides = cfg.transient_strides;
  tr.gait = setup.gait;
  tr.gait.T = T_eff;
  switch (setup.mode) {
    case TrialMode::open_loop_coupled:
      tr.gait.gait = GaitKind::coupled_sine;
      break;
    case TrialMode::open_loop_decoupled:
      tr.gait.gait = GaitKind::decoupled_sine;
      break;
    default:
      break;
  }
  tr.leg_phase = ref.leg_phase;
  tr.has_contact_data = on_ground;

  std::array<detail::LegLoopState, 4> loop;
  bool saturated = false;
  bool diverged = false;

  auto reserve = [&](std::vector<double>& v) { v.reserve(n_ticks); };
  reserve(tr.t);
  reserve(tr.x_b);
  reserve(tr.z_b);
  reserve(tr.th_b);
  reserve(tr.vx_b);
  reserve(tr.vz_b);
  reserve(tr.om_b);

  std::array<LegContactSnapshot, 4> snap =
      robot_leg_snapshot(rs, plant, surface);

  for (std::size_t k = 0; k < n_ticks; ++k) {
    tr.t.push_back(static_cast<double>(k) * dt);
    tr.x_b.push_back(rs.x_b);
    tr.z_b.push_back(rs.z_b);
    tr.th_b.push_back(rs.th_b);
    tr.vx_b.push_back(rs.vx_b);
    tr.vz_b.push_back(rs.vz_b);
    tr.om_b.push_back(rs.om_b);

    std::array<Eigen::Vector2d, 4> cmds;
    for (std::size_t i = 0; i < 4; ++i) {
      detail::LegLoopState& ls = loop[i];
      const TransmissionState& leg = rs.legs[i];
      LegSeries& rec = tr.legs[i];

      // Sample the encoders first: the voltage at the pads is still the
      // hold value commanded one tick ago.
      Eigen::Vector2d vm_corr, v_corr, im;
      const std::array<double, 2> qd{leg.qd_s, leg.qd_l};
      for (std::size_t axis = 0; axis < 2; ++axis) {
        const ActuatorCalibration& ch = cal.legs[i][axis];
        const auto ax = static_cast<Eigen::Index>(axis);
        EncoderSample raw =
            simulate_encoder(qd[axis], ls.cmd_prev(ax), ls.cmd_prev2(ax),
                             sp, &noise);
        raw.V_m += cfg.offset_vm;
        raw.V += cfg.offset_v;
        const EncoderSample corr{raw.V_m - ch.offset_vm,
                                 raw.V - ch.offset_v};
        const double v_dot = (corr.V - ls.v_corr_prev[axis]) / dt;
        im(ax) = mechanical_current(corr, v_dot, sp);
        vm_corr(ax) = corr.V_m;
        v_corr(ax) = corr.V;
        ls.v_corr_prev[axis] = corr.V;
      }

      filter_tick(ls.filter, model.augmented[i], model.kalman_gain[i],
                  v_corr, vm_corr);

      const std::size_t idx = ref.leg_index(static_cast<int>(i), k);
      const ControlOutput out = control_step(
          laws[i], ref.samples[idx], ls.filter.process_state(), idx);
      saturated = saturated || out.saturated;
      cmds[i] = out.u;

      rec.q_s.push_back(leg.q_s);
      rec.qd_s.push_back(leg.qd_s);
      rec.q_l.push_back(leg.q_l);
      rec.qd_l.push_back(leg.qd_l);
      rec.est_q_s.push_back(ls.filter.x_hat(0));
      rec.est_qd_s.push_back(ls.filter.x_hat(1));
      rec.est_q_l.push_back(ls.filter.x_hat(2));
      rec.est_qd_l.push_back(ls.filter.x_hat(3));
      rec.ref_q_s.push_back(ref.samples[idx](0));
      rec.ref_qd_s.push_back(ref.samples[idx](1));
      rec.ref_q_l.push_back(ref.samples[idx](2));
      rec.ref_qd_l.push_back(ref.samples[idx](3));
      rec.cmd_v_s.push_back(out.u(0));
      rec.cmd_v_l.push_back(out.u(1));
      rec.vm_s.push_back(vm_corr(0));
      rec.vm_l.push_back(vm_corr(1));
      rec.v_s.push_back(v_corr(0));
      rec.v_l.push_back(v_corr(1));
      rec.im_s.push_back(im(0));
      rec.im_l.push_back(im(1));
      rec.tip_x.push_back(snap[i].tip_x);
      rec.tip_z.push_back(snap[i].tip_z);
      rec.tip_vx.push_back(snap[i].tip_vx);
      rec.contact.push_back(snap[i].in_contact ? 1 : 0);

      ls.cmd_prev2 = ls.cmd_prev;
      ls.cmd_prev = out.u;
    }

    if (k + 1 == n_ticks) break;
    try {
      advance(cmds, &snap);
    } catch (const NonFinite&) {
      diverged = true;
      break;
    }
  }

  TrialRecord rec;
  rec.trace = std::move(tr);
  if (diverged) {
    rec.metrics.diverged = true;
    rec.metrics.saturated = saturated;
    throw Divergence("run_trial: plant state diverged");
  }

  rec.metrics = compute_metrics(rec.trace, cfg.step_length_mm,
                                cfg.robot_mass_g);
  rec.metrics.saturated = saturated;

  // Commanded-voltage RMS over the analysis window, the baseline inputs.
  {
    const AnalysisWindow w = analysis_window(rec.trace);
    double acc_all = 0.0, acc_s = 0.0, acc_l = 0.0;
    const auto count = static_cast<double>(w.end - w.start);
    for (const LegSeries& leg : rec.trace.legs) {
      double ms = 0.0, ml = 0.0, mean_s = 0.0, mean_l = 0.0;
      for (std::size_t k = w.start; k < w.end; ++k) {
        mean_s += leg.cmd_v_s[k];
        mean_l += leg.cmd_v_l[k];
      }
      mean_s /= count;
      mean_l /= count;
      for (std::size_t k = w.start; k < w.end; ++k) {
        ms += (leg.cmd_v_s[k] - mean_s) * (leg.cmd_v_s[k] - mean_s);
        ml += (leg.cmd_v_l[k] - mean_l) * (leg.cmd_v_l[k] - mean_l);
      }
      acc_s += std::sqrt(ms / count);
      acc_l += std::sqrt(ml / count);
    }
    rec.commanded_rms.swing = acc_s / 4.0;
    rec.commanded_rms.lift = acc_l / 4.0;
    rec.commanded_rms.all = (acc_s + acc_l) / 8.0;
  }
  return rec;
}

}  // namespace proprio
