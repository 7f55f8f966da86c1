#pragma once

#include <Eigen/Dense>
#include <algorithm>
#include <array>
#include <cmath>
#include <optional>

#include "proprio/errors.hpp"
#include "proprio/units.hpp"

namespace proprio {

/// Second-order surrogate dynamics of one actuator axis pair:
///   m_eff qdd = -k1 q - k3 q^3 - b qd - b2 qd|qd| - k_bl q_s q_l
///               + k_v (V - v_bias) + F_ext
/// Parameters are chosen so the small-signal resonance sits in the
/// 80-100 Hz band and the static gain is k_v/k1 mm per volt.
struct TransmissionParams {
  double m_eff = 3.5139;   // g, reflected at the actuator tip
  double k1 = 1123.8;      // mN/mm
  double k3 = 2497.0;      // mN/mm^3, hardening
  double b = 3.9741;       // mN*s/mm, critical at the linear resonance
  double b2 = 0.05;        // mN*s^2/mm^2, rate-quadratic loss
  double k_bl = 600.0;     // mN/mm^2, bilinear swing-lift cross stiffness
  double k_v = 4.4952;     // mN/V
  double v_bias = 0.0;     // V
  double q_max = 0.15;     // mm, expected deflection box
  double h_max = 4e-5;     // s, integrator substep ceiling

  double static_gain() const { return k_v / k1; }  // mm/V
  double natural_frequency_hz() const {
    return std::sqrt(k1 * units::kForceToAccel / m_eff) / (2.0 * M_PI);
  }
};

/// Position and velocity of the swing and lift actuators of one
/// transmission (mm, mm/s).
struct TransmissionState {
  double q_s = 0.0;
  double qd_s = 0.0;
  double q_l = 0.0;
  double qd_l = 0.0;

  Eigen::Vector4d vec() const { return {q_s, qd_s, q_l, qd_l}; }
  static TransmissionState from_vec(const Eigen::Vector4d& v) {
    return {v(0), v(1), v(2), v(3)};
  }
};

/// Leg tip position in the transmission frame: +l_x protracts (forward),
/// +l_z adducts (down toward the ground).
struct LegPose {
  double l_x = 0.0;
  double l_z = 0.0;
};

/// Smooth polynomial actuator-to-leg map. Each channel vanishes with its
/// own actuator coordinate, so the neutral posture and the pure-deflection
/// axes stay exactly decoupled:
///   l_x = gain_x * q_s * (1 + cross_x * q_l)
///   l_z = gain_z * q_l * (1 + cross_z * q_s)
/// The Jacobian determinant is gain_x*gain_z*(1 + cross_x q_l + cross_z q_s),
/// which stays positive on the extended deflection box.
struct KinematicsParams {
  double gain_x = 4.7 / 0.175;  // mm leg per mm actuator
  double gain_z = 4.7 / 0.175;
  double cross_x = 0.4;  // 1/mm
  double cross_z = 0.4;
  double q_max = 0.15;  // mm; maps accept up to 1.5x this box
};

inline LegPose leg_kinematics(const KinematicsParams& k, double q_s,
                              double q_l) {
  const double lim = 1.5 * k.q_max * (1.0 + 1e-12);
  if (std::abs(q_s) > lim || std::abs(q_l) > lim) {
    throw OutOfRange("leg_kinematics: actuator position outside box");
  }
  return {k.gain_x * q_s * (1.0 + k.cross_x * q_l),
          k.gain_z * q_l * (1.0 + k.cross_z * q_s)};
}

inline Eigen::Matrix2d leg_jacobian(const KinematicsParams& k, double q_s,
                                    double q_l) {
  Eigen::Matrix2d J;
  J << k.gain_x * (1.0 + k.cross_x * q_l), k.gain_x * q_s * k.cross_x,
      k.gain_z * q_l * k.cross_z, k.gain_z * (1.0 + k.cross_z * q_s);
  return J;
}

/// Newton inverse of leg_kinematics. Converges to machine precision in a
/// handful of steps anywhere on the (extended) deflection box.
inline std::pair<double, double> inverse_leg_kinematics(
    const KinematicsParams& k, const LegPose& leg) {
  double q_s = leg.l_x / k.gain_x;
  double q_l = leg.l_z / k.gain_z;
  for (int it = 0; it < 50; ++it) {
    const double rx = k.gain_x * q_s * (1.0 + k.cross_x * q_l) - leg.l_x;
    const double rz = k.gain_z * q_l * (1.0 + k.cross_z * q_s) - leg.l_z;
    if (std::abs(rx) + std::abs(rz) < 1e-13 * std::max(1.0, k.gain_x)) {
      const double lim = 2.0 * k.q_max;
      if (std::abs(q_s) > lim || std::abs(q_l) > lim) {
        throw OutOfRange("inverse_leg_kinematics: target outside image");
      }
      return {q_s, q_l};
    }
    Eigen::Matrix2d J = leg_jacobian(k, q_s, q_l);
    const double det = J.determinant();
    if (std::abs(det) < 1e-9) {
      throw OutOfRange("inverse_leg_kinematics: singular Jacobian");
    }
    const Eigen::Vector2d step = J.inverse() * Eigen::Vector2d(rx, rz);
    q_s -= step(0);
    q_l -= step(1);
  }
  throw OutOfRange("inverse_leg_kinematics: Newton did not converge");
}

/// Penalty ground. k_n doubles as the robot's vertical suspension
/// stiffness: its default is chosen so the standing body z-mode lands near
/// 10 Hz once the transmission compliance is in series.
struct SurfaceModel {
  double height = 0.0;  // world z of the plane (z up), mm
  double k_n = 15.0;    // mN/mm
  double c_n = 0.02;    // mN*s/mm
  double mu = 0.5;
  double v_reg = 1.0;  // mm/s

  bool valid() const { return k_n > 0 && c_n >= 0 && mu >= 0 && v_reg > 0; }
};

struct ContactResult {
  double f_x = 0.0;  // world fore-aft (mN), regularized Coulomb friction
  double f_n = 0.0;  // world up (mN), never tensile
  bool in_contact = false;
  bool slip = false;  // moving against the heading while loaded
};

/// Total contact law for one leg tip, world frame with z up.
inline ContactResult contact_force(double tip_x, double tip_z, double v_x,
                                   double v_z, const SurfaceModel& surf,
                                   double heading) {
  (void)tip_x;
  ContactResult r;
  const double pen = surf.height - tip_z;
  if (pen <= 0.0) return r;
  r.in_contact = true;
  r.f_n = std::max(0.0, surf.k_n * pen + surf.c_n * (-v_z));
  r.f_x = -surf.mu * r.f_n * std::tanh(v_x / surf.v_reg);
  r.slip = v_x * heading < 0.0;
  return r;
}

namespace detail {

inline Eigen::Vector2d transmission_accel(const TransmissionState& s,
                                          const TransmissionParams& p,
                                          const Eigen::Vector2d& u,
                                          const Eigen::Vector2d& f_act) {
  const double cross = p.k_bl * s.q_s * s.q_l;
  const double f_s = -p.k1 * s.q_s - p.k3 * s.q_s * s.q_s * s.q_s -
                     p.b * s.qd_s - p.b2 * s.qd_s * std::abs(s.qd_s) - cross +
                     p.k_v * (u(0) - p.v_bias) + f_act(0);
  const double f_l = -p.k1 * s.q_l - p.k3 * s.q_l * s.q_l * s.q_l -
                     p.b * s.qd_l - p.b2 * s.qd_l * std::abs(s.qd_l) - cross +
                     p.k_v * (u(1) - p.v_bias) + f_act(1);
  return {f_s * units::kForceToAccel / p.m_eff,
          f_l * units::kForceToAccel / p.m_eff};
}

inline void substep_transmission(TransmissionState& s,
                                 const TransmissionParams& p,
                                 const Eigen::Vector2d& u,
                                 const Eigen::Vector2d& f_act, double h) {
  const Eigen::Vector2d a = transmission_accel(s, p, u, f_act);
  s.qd_s += a(0) * h;
  s.qd_l += a(1) * h;
  s.q_s += s.qd_s * h;
  s.q_l += s.qd_l * h;
}

inline int substep_count(double dt, double h_max) {
  return std::max(1, static_cast<int>(std::ceil(dt / h_max - 1e-9)));
}

}  // namespace detail

/// Advances one transmission by dt under a constant voltage pair and a
/// constant external force given in the leg frame (+x protraction,
/// +z adduction). Semi-implicit Euler with internal substeps.
inline TransmissionState step_transmission(const TransmissionState& state,
                                           const TransmissionParams& p,
                                           const KinematicsParams& kin,
                                           const Eigen::Vector2d& u,
                                           const Eigen::Vector2d& f_leg,
                                           double dt) {
  if (!(dt > 0.0) || dt > 1e-3) {
    throw InvalidTimestep("step_transmission: dt must be in (0, 1 ms]");
  }
  const int n = detail::substep_count(dt, p.h_max);
  const double h = dt / n;
  TransmissionState s = state;
  for (int i = 0; i < n; ++i) {
    const Eigen::Vector2d f_act =
        leg_jacobian(kin, s.q_s, s.q_l).transpose() *
        Eigen::Vector2d(f_leg(0), f_leg(1));
    detail::substep_transmission(s, p, u, f_act, h);
  }
  if (!std::isfinite(s.q_s + s.qd_s + s.q_l + s.qd_l)) {
    throw NonFinite("step_transmission: state diverged");
  }
  return s;
}

/// Sagittal-plane rigid body carrying the four legs. Leg order is
/// FL, FR, RL, RR; the two front hips share hip_x, the rear pair uses
/// -hip_x. Pitch inertia comes from a uniform box of the body length.
struct BodyParams {
  double mass = 1.43;     // g
  double length = 45.0;   // mm
  double hip_x = 12.0;    // mm
  double hip_drop = 12.0;  // mm from body origin down to the neutral foot

  double inertia() const { return mass * length * length / 12.0; }
};

struct RobotState {
  double x_b = 0.0, z_b = 0.0, th_b = 0.0;
  double vx_b = 0.0, vz_b = 0.0, om_b = 0.0;
  std::array<TransmissionState, 4> legs{};
};

struct LegContactSnapshot {
  double tip_x = 0.0, tip_z = 0.0;  // world, z up
  double tip_vx = 0.0, tip_vz = 0.0;
  bool in_contact = false;
  bool slip = false;
  double f_n = 0.0;
};

struct PlantConfig {
  TransmissionParams trans;
  KinematicsParams kin;
  BodyParams body;
};

namespace detail {

struct LegWorld {
  double x, z, vx, vz;  // tip, world frame (z up)
};

// Internal evaluation clamps to the extended box instead of throwing so a
// hard contact transient cannot abort the integrator mid-substep.
inline LegPose leg_kinematics_clamped(const KinematicsParams& k, double q_s,
                                      double q_l) {
  const double lim = 1.5 * k.q_max;
  q_s = std::clamp(q_s, -lim, lim);
  q_l = std::clamp(q_l, -lim, lim);
  return {k.gain_x * q_s * (1.0 + k.cross_x * q_l),
          k.gain_z * q_l * (1.0 + k.cross_z * q_s)};
}

inline LegWorld leg_world(const RobotState& rs, const PlantConfig& cfg,
                          int i) {
  const double sgn = (i < 2) ? 1.0 : -1.0;
  const double c = std::cos(rs.th_b), s = std::sin(rs.th_b);
  const TransmissionState& leg = rs.legs[static_cast<std::size_t>(i)];
  const LegPose lp = leg_kinematics_clamped(cfg.kin, leg.q_s, leg.q_l);
  // Body-frame tip (z up): hip plus deflection, adduction pointing down.
  const double bx = sgn * cfg.body.hip_x + lp.l_x;
  const double bz = -cfg.body.hip_drop - lp.l_z;
  LegWorld w;
  w.x = rs.x_b + c * bx - s * bz;
  w.z = rs.z_b + s * bx + c * bz;
  const Eigen::Vector2d ld =
      leg_jacobian(cfg.kin, leg.q_s, leg.q_l) *
      Eigen::Vector2d(leg.qd_s, leg.qd_l);
  const double bvx = ld(0);
  const double bvz = -ld(1);
  const double rx = c * bx - s * bz;
  const double rz = s * bx + c * bz;
  w.vx = rs.vx_b - rs.om_b * rz + c * bvx - s * bvz;
  w.vz = rs.vz_b + rs.om_b * rx + s * bvx + c * bvz;
  return w;
}

}  // namespace detail

/// Per-leg world tip state and contact flags for a given robot state.
inline std::array<LegContactSnapshot, 4> robot_leg_snapshot(
    const RobotState& rs, const PlantConfig& cfg,
    const std::optional<SurfaceModel>& surface, double heading = 1.0) {
  std::array<LegContactSnapshot, 4> snap{};
  for (int i = 0; i < 4; ++i) {
    const detail::LegWorld w = detail::leg_world(rs, cfg, i);
    LegContactSnapshot& lc = snap[static_cast<std::size_t>(i)];
    lc = {w.x, w.z, w.vx, w.vz, false, false, 0.0};
    if (surface) {
      const ContactResult cr =
          contact_force(w.x, w.z, w.vx, w.vz, *surface, heading);
      lc.in_contact = cr.in_contact;
      lc.slip = cr.slip;
      lc.f_n = cr.f_n;
    }
  }
  return snap;
}

/// Advances the whole robot by dt under the eight drive voltages
/// (per leg: swing, lift). Contact is the only coupling between the body
/// and the transmissions: with no surface the legs integrate exactly as
/// step_transmission does. Returns the per-leg contact snapshot of the
/// last substep via `contacts` when requested.
inline RobotState step_robot(
    const RobotState& state, const PlantConfig& cfg,
    const std::array<Eigen::Vector2d, 4>& u,
    const std::optional<SurfaceModel>& surface, double dt,
    double heading = 1.0,
    std::array<LegContactSnapshot, 4>* contacts = nullptr) {
  if (!(dt > 0.0) || dt > 1e-3) {
    throw InvalidTimestep("step_robot: dt must be in (0, 1 ms]");
  }
  const int n = detail::substep_count(dt, cfg.trans.h_max);
  const double h = dt / n;
  RobotState rs = state;
  const TransmissionParams& tp = cfg.trans;

  for (int step = 0; step < n; ++step) {
    double fx_tot = 0.0, fz_tot = 0.0, tau = 0.0;
    const double c = std::cos(rs.th_b), s = std::sin(rs.th_b);
    for (int i = 0; i < 4; ++i) {
      TransmissionState& leg = rs.legs[static_cast<std::size_t>(i)];
      double f_n = 0.0;
      detail::LegWorld w{};
      if (surface) {
        w = detail::leg_world(rs, cfg, i);
        const double pen = surface->height - w.z;
        if (pen > 0.0) {
          f_n = std::max(0.0, surface->k_n * pen + surface->c_n * (-w.vz));
        }
      }
      if (f_n <= 0.0) {
        // Airborne legs take the exact step_transmission path so that
        // contact stays the only body/leg coupling.
        detail::substep_transmission(leg, tp, u[static_cast<std::size_t>(i)],
                                     Eigen::Vector2d::Zero(), h);
        continue;
      }

      // Friction reflected through the leg gain is far too stiff for an
      // explicit update, so the swing velocity substep is solved
      // implicitly in the friction force.
      const Eigen::Matrix2d J = leg_jacobian(cfg.kin, leg.q_s, leg.q_l);
      const Eigen::Vector2d a0 = detail::transmission_accel(
          leg, tp, u[static_cast<std::size_t>(i)], Eigen::Vector2d::Zero());
      const double gain = units::kForceToAccel / tp.m_eff;
      auto friction = [&](double qd_s_new) {
        const double vx = w.vx + c * J(0, 0) * (qd_s_new - leg.qd_s);
        return -surface->mu * f_n * std::tanh(vx / surface->v_reg);
      };
      // Leg-frame force for a given friction value (+x forward, +z down).
      auto f_leg_of = [&](double f_t) {
        return Eigen::Vector2d(c * f_t + s * f_n, s * f_t - c * f_n);
      };
      double x = leg.qd_s;
      for (int it = 0; it < 30; ++it) {
        const double f_t = friction(x);
        const Eigen::Vector2d fa = J.transpose() * f_leg_of(f_t);
        const double g = x - leg.qd_s - h * (a0(0) + gain * fa(0));
        const double sech = 1.0 / std::cosh((w.vx + c * J(0, 0) *
                                             (x - leg.qd_s)) /
                                            surface->v_reg);
        const double dfdx =
            -surface->mu * f_n * sech * sech / surface->v_reg * c * J(0, 0);
        const double gp = 1.0 - h * gain * (J(0, 0) * c * dfdx);
        const double dx = g / gp;
        x -= dx;
        if (std::abs(dx) < 1e-12 * std::max(1.0, std::abs(x))) break;
      }
      const double f_t = friction(x);
      const Eigen::Vector2d f_leg = f_leg_of(f_t);
      const Eigen::Vector2d f_act = J.transpose() * f_leg;

      leg.qd_s = leg.qd_s + h * (a0(0) + gain * f_act(0));
      leg.qd_l = leg.qd_l + h * (a0(1) + gain * f_act(1));
      leg.q_s += leg.qd_s * h;
      leg.q_l += leg.qd_l * h;

      fx_tot += f_t;
      fz_tot += f_n;
      tau += (w.x - rs.x_b) * f_n - (w.z - rs.z_b) * f_t;
    }

    const double ax = fx_tot * units::kForceToAccel / cfg.body.mass;
    const double az = fz_tot * units::kForceToAccel / cfg.body.mass -
                      units::kGravityMmPerS2;
    const double alpha = tau * units::kTorqueToAngAccel / cfg.body.inertia();
    rs.vx_b += ax * h;
    rs.vz_b += az * h;
    rs.om_b += alpha * h;
    rs.x_b += rs.vx_b * h;
    rs.z_b += rs.vz_b * h;
    rs.th_b += rs.om_b * h;
  }

  if (!std::isfinite(rs.x_b + rs.z_b + rs.th_b + rs.vx_b + rs.vz_b +
                     rs.om_b)) {
    throw NonFinite("step_robot: body state diverged");
  }
  if (contacts != nullptr) {
    // Snapshot describes the tick boundary the caller records in traces.
    *contacts = robot_leg_snapshot(rs, cfg, surface, heading);
  }
  return rs;
}

}  // namespace proprio
