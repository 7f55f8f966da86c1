#pragma once

#include <Eigen/Dense>
#include <algorithm>
#include <array>
#include <cmath>
#include <vector>

#include "proprio/errors.hpp"

namespace proprio {

enum class GaitKind { trot, pronk, coupled_sine, decoupled_sine };

inline const char* to_string(GaitKind g) {
  switch (g) {
    case GaitKind::trot: return "trot";
    case GaitKind::pronk: return "pronk";
    case GaitKind::coupled_sine: return "coupled_sine";
    case GaitKind::decoupled_sine: return "decoupled_sine";
  }
  return "?";
}

/// Leg-trajectory parameters. Amplitudes are in micrometers of actuator
/// travel; S1/S2/S3 are the shape controls in percent.
struct GaitParams {
  GaitKind gait = GaitKind::trot;
  double A_S_um = 175.0;
  double A_L_um = 175.0;
  double T = 0.1;     // s
  double S1 = 70.0;   // leg retraction period, % of T
  double S2 = 25.0;   // max leg adduction, % of A_L (trot)
  double S3 = 50.0;   // leg adduction period, % of T (pronk)

  static GaitParams trot_default() { return GaitParams{}; }
  static GaitParams pronk_default() {
    GaitParams p;
    p.gait = GaitKind::pronk;
    p.A_S_um = 150.0;
    p.A_L_um = 150.0;
    p.S1 = 50.0;
    p.S3 = 80.0;
    return p;
  }

  void validate() const {
    const double f = 1.0 / T;
    if (!(f >= 10.0 - 1e-9 && f <= 50.0 + 1e-9)) {
      throw ParamOutOfRange("GaitParams: stride frequency outside 10-50 Hz");
    }
    if (S1 < 50.0 || S1 > 80.0) {
      throw ParamOutOfRange("GaitParams: S1 outside [50, 80]");
    }
    if (gait == GaitKind::trot && (S2 < -75.0 || S2 > 25.0)) {
      throw ParamOutOfRange("GaitParams: S2 outside [-75, 25]");
    }
    if (gait == GaitKind::pronk && (S3 < 20.0 || S3 > 80.0)) {
      throw ParamOutOfRange("GaitParams: S3 outside [20, 80]");
    }
    if (A_S_um <= 0.0 || A_L_um <= 0.0) {
      throw ParamOutOfRange("GaitParams: amplitudes must be positive");
    }
  }
};

/// Piecewise-linear keyframe schedule over one stride, phases in [0, 1).
/// Shared phase grid for both channels; linear interpolation wraps.
struct KeyframeSchedule {
  std::vector<double> phase;
  std::vector<double> swing_mm;
  std::vector<double> lift_mm;
};

namespace detail {

struct Corner {
  double phase;
  double value;
};

// Wrapping linear interpolation through corner points.
inline double pl_eval(const std::vector<Corner>& c, double ph) {
  ph -= std::floor(ph);
  const std::size_t n = c.size();
  for (std::size_t i = 0; i < n; ++i) {
    const Corner& a = c[i];
    const Corner& b = c[(i + 1) % n];
    double pa = a.phase, pb = b.phase;
    double p = ph;
    if (pb <= pa) pb += 1.0;          // wrapping segment
    if (p < pa) p += 1.0;
    if (p >= pa - 1e-12 && p <= pb + 1e-12) {
      const double w = (pb > pa) ? (p - pa) / (pb - pa) : 0.0;
      return a.value + w * (b.value - a.value);
    }
  }
  return c.front().value;
}

inline KeyframeSchedule merge_corners(const std::vector<Corner>& swing,
                                      const std::vector<Corner>& lift) {
  std::vector<double> phases;
  for (const Corner& c : swing) phases.push_back(c.phase);
  for (const Corner& c : lift) phases.push_back(c.phase);
  std::sort(phases.begin(), phases.end());
  phases.erase(std::unique(phases.begin(), phases.end(),
                           [](double a, double b) {
                             return std::abs(a - b) < 1e-9;
                           }),
               phases.end());
  KeyframeSchedule ks;
  for (double p : phases) {
    ks.phase.push_back(p);
    ks.swing_mm.push_back(pl_eval(swing, p));
    ks.lift_mm.push_back(pl_eval(lift, p));
  }
  return ks;
}

}  // namespace detail

/// Trot keyframes: constant-speed retraction over S1% of the stride, the
/// lift peak (S2% of A_L) centered in the stance window and the abduction
/// trough centered in the protraction window.
inline KeyframeSchedule keyframes_trot(const GaitParams& p) {
  if (p.gait != GaitKind::trot) {
    throw ParamOutOfRange("keyframes_trot: params are not a trot");
  }
  p.validate();
  const double A_s = p.A_S_um * 1e-3;
  const double A_l = p.A_L_um * 1e-3;
  const double s1 = p.S1 / 100.0;
  const std::vector<detail::Corner> swing{{0.0, A_s / 2.0},
                                          {s1, -A_s / 2.0}};
  const std::vector<detail::Corner> lift{
      {s1 / 2.0, p.S2 / 100.0 * A_l},
      {(1.0 + s1) / 2.0, -A_l / 2.0}};
  return detail::merge_corners(swing, lift);
}

/// Pronk keyframes: swing as in the trot; lift adducted for S3% of the
/// stride starting at phase zero, abducted for the remainder, with short
/// symmetric ramps at the transitions.
inline KeyframeSchedule keyframes_pronk(const GaitParams& p) {
  if (p.gait != GaitKind::pronk) {
    throw ParamOutOfRange("keyframes_pronk: params are not a pronk");
  }
  p.validate();
  const double A_s = p.A_S_um * 1e-3;
  const double A_l = p.A_L_um * 1e-3;
  const double s1 = p.S1 / 100.0;
  const double s3 = p.S3 / 100.0;
  const double r = 0.05;  // transition ramp, fraction of T
  const std::vector<detail::Corner> swing{{0.0, A_s / 2.0},
                                          {s1, -A_s / 2.0}};
  const std::vector<detail::Corner> lift{{r / 2.0, A_l / 2.0},
                                         {s3 - r / 2.0, A_l / 2.0},
                                         {s3 + r / 2.0, -A_l / 2.0},
                                         {1.0 - r / 2.0, -A_l / 2.0}};
  return detail::merge_corners(swing, lift);
}

/// Periodic cubic spline through non-uniform knots, C2 across the seam.
class PeriodicSpline {
 public:
  PeriodicSpline() = default;

  PeriodicSpline(std::vector<double> knot_t, std::vector<double> values,
                 double period)
      : t_(std::move(knot_t)), y_(std::move(values)), period_(period) {
    const std::size_t m = t_.size();
    if (m < 2 || y_.size() != m || period_ <= 0.0) {
      throw NonPeriodicKeyframes("PeriodicSpline: need >= 2 knots");
    }
    for (std::size_t i = 0; i + 1 < m; ++i) {
      if (t_[i + 1] <= t_[i]) {
        throw NonPeriodicKeyframes("PeriodicSpline: knots not increasing");
      }
    }
    if (t_.front() < 0.0 || t_.back() >= period_) {
      throw NonPeriodicKeyframes("PeriodicSpline: knots outside one period");
    }

    std::vector<double> h(m);
    for (std::size_t i = 0; i < m; ++i) {
      h[i] = (i + 1 < m ? t_[i + 1] : t_[0] + period_) - t_[i];
    }
    Eigen::MatrixXd Amat = Eigen::MatrixXd::Zero(
        static_cast<Eigen::Index>(m), static_cast<Eigen::Index>(m));
    Eigen::VectorXd rhs(static_cast<Eigen::Index>(m));
    for (std::size_t i = 0; i < m; ++i) {
      const std::size_t im = (i + m - 1) % m;
      const std::size_t ip = (i + 1) % m;
      const auto ii = static_cast<Eigen::Index>(i);
      Amat(ii, static_cast<Eigen::Index>(im)) += h[im] / 6.0;
      Amat(ii, ii) += (h[im] + h[i]) / 3.0;
      Amat(ii, static_cast<Eigen::Index>(ip)) += h[i] / 6.0;
      rhs(ii) = (y_[ip] - y_[i]) / h[i] - (y_[i] - y_[im]) / h[im];
    }
    const Eigen::VectorXd M = Amat.partialPivLu().solve(rhs);
    m2_.assign(M.data(), M.data() + M.size());
    h_ = std::move(h);
  }

  double period() const { return period_; }

  /// Value and first derivative at time t (wraps modulo the period).
  std::pair<double, double> eval(double t) const {
    double tt = std::fmod(t - t_.front(), period_);
    if (tt < 0.0) tt += period_;
    tt += t_.front();
    // Find the interval; knot counts are tiny, linear scan is fine.
    std::size_t i = t_.size() - 1;
    for (std::size_t j = 0; j + 1 < t_.size(); ++j) {
      if (tt < t_[j + 1]) {
        i = j;
        break;
      }
    }
    const std::size_t ip = (i + 1) % t_.size();
    const double hi = h_[i];
    const double dl = tt - t_[i];
    const double dr = hi - dl;
    const double yi = y_[i], yp = y_[ip];
    const double Mi = m2_[i], Mp = m2_[ip];
    const double val = (Mi * dr * dr * dr + Mp * dl * dl * dl) / (6.0 * hi) +
                       (yi / hi - Mi * hi / 6.0) * dr +
                       (yp / hi - Mp * hi / 6.0) * dl;
    const double der = (-Mi * dr * dr + Mp * dl * dl) / (2.0 * hi) -
                       (yi / hi - Mi * hi / 6.0) +
                       (yp / hi - Mp * hi / 6.0);
    return {val, der};
  }

 private:
  std::vector<double> t_;
  std::vector<double> y_;
  std::vector<double> h_;
  std::vector<double> m2_;
  double period_ = 0.0;
};

/// Sampled periodic reference for one leg: rows are
/// (q_s, qd_s, q_l, qd_l) at the control rate. Velocities are the analytic
/// spline derivative. leg_phase holds per-leg offsets as fractions of T.
struct ReferenceTrajectory {
  std::vector<Eigen::Vector4d> samples;
  std::size_t period = 0;
  std::array<double, 4> leg_phase{0.0, 0.0, 0.0, 0.0};
  PeriodicSpline swing;
  PeriodicSpline lift;

  std::size_t leg_index(int leg, std::size_t k) const {
    const double off = leg_phase[static_cast<std::size_t>(leg)];
    const auto shift = static_cast<std::size_t>(
        std::llround(off * static_cast<double>(period)));
    return (k + shift) % period;
  }
};

/// Number of steps per stride implied by the leg phasing (two for
/// diagonal-pair gaits, one for synchronized gaits).
inline int steps_per_stride(const std::array<double, 4>& leg_phase) {
  std::vector<double> distinct;
  for (double p : leg_phase) {
    bool found = false;
    for (double q : distinct) {
      if (std::abs(p - q) < 1e-9) found = true;
    }
    if (!found) distinct.push_back(p);
  }
  return static_cast<int>(distinct.size());
}

inline std::array<double, 4> assign_leg_phases(GaitKind gait) {
  switch (gait) {
    case GaitKind::trot:
      return {0.0, 0.5, 0.5, 0.0};  // FL, FR, RL, RR; diagonal pairs
    case GaitKind::pronk:
      return {0.0, 0.0, 0.0, 0.0};
    case GaitKind::coupled_sine:
    case GaitKind::decoupled_sine:
      return {0.0, 0.0, 0.0, 0.0};  // caller overrides with the base gait
  }
  return {0.0, 0.0, 0.0, 0.0};
}

/// Fits the periodic cubic spline through the keyframe schedule (densified
/// onto a uniform grid so the constant-speed segments survive) and samples
/// it at the control rate. dt must divide T to within 0.1%.
inline ReferenceTrajectory spline_reference(const KeyframeSchedule& ks,
                                            double T, double dt,
                                            int knots_per_period = 24) {
  if (ks.phase.size() < 2 || ks.swing_mm.size() != ks.phase.size() ||
      ks.lift_mm.size() != ks.phase.size()) {
    throw NonPeriodicKeyframes("spline_reference: bad keyframe schedule");
  }
  for (double p : ks.phase) {
    if (p < 0.0 || p >= 1.0) {
      throw NonPeriodicKeyframes(
          "spline_reference: keyframe phases must lie in [0, 1)");
    }
  }
  const auto period = static_cast<std::size_t>(std::llround(T / dt));
  if (period < 8 ||
      std::abs(static_cast<double>(period) * dt - T) > 1e-3 * T) {
    throw InvalidTimestep("spline_reference: dt must divide T within 0.1%");
  }

  // Knot grid: uniform phases plus the corner phases themselves.
  std::vector<detail::Corner> swing_c, lift_c;
  for (std::size_t i = 0; i < ks.phase.size(); ++i) {
    swing_c.push_back({ks.phase[i], ks.swing_mm[i]});
    lift_c.push_back({ks.phase[i], ks.lift_mm[i]});
  }
  std::vector<double> grid;
  for (int j = 0; j < knots_per_period; ++j) {
    grid.push_back(static_cast<double>(j) /
                   static_cast<double>(knots_per_period));
  }
  for (double p : ks.phase) grid.push_back(p);
  std::sort(grid.begin(), grid.end());
  grid.erase(std::unique(grid.begin(), grid.end(),
                         [](double a, double b) {
                           return std::abs(a - b) < 1e-9;
                         }),
             grid.end());

  std::vector<double> knot_t, swing_y, lift_y;
  for (double p : grid) {
    knot_t.push_back(p * T);
    swing_y.push_back(detail::pl_eval(swing_c, p));
    lift_y.push_back(detail::pl_eval(lift_c, p));
  }

  ReferenceTrajectory ref;
  ref.period = period;
  ref.swing = PeriodicSpline(knot_t, swing_y, T);
  ref.lift = PeriodicSpline(knot_t, lift_y, T);
  ref.samples.resize(period);
  for (std::size_t k = 0; k < period; ++k) {
    const double t = static_cast<double>(k) * dt;
    const auto [qs, qds] = ref.swing.eval(t);
    const auto [ql, qdl] = ref.lift.eval(t);
    ref.samples[k] = Eigen::Vector4d(qs, qds, ql, qdl);
  }
  return ref;
}

/// RMS voltage targets measured from a closed-loop sweep; inputs to the
/// sinusoid baselines.
struct BaselineRms {
  double all = 0.0;    // average over all eight actuators, V
  double swing = 0.0;  // average over the four swing actuators, V
  double lift = 0.0;   // average over the four lift actuators, V
};

struct SinusoidBaseline {
  ReferenceTrajectory ref;
  std::vector<Eigen::Vector2d> drive;  // per-sample (V_swing, V_lift)
};

/// Voltage-matched elliptical baseline: swing sine and lift cosine whose
/// amplitudes reproduce the measured RMS targets (one shared amplitude for
/// the coupled matching, per-DOF amplitudes for the decoupled one). The
/// lift lags the swing by a quarter period so stance coincides with
/// retraction.
inline SinusoidBaseline sinusoid_reference(GaitKind matching,
                                           const BaselineRms& rms,
                                           GaitKind base_gait, double T,
                                           double dt,
                                           double static_gain_mm_per_v) {
  if (matching != GaitKind::coupled_sine &&
      matching != GaitKind::decoupled_sine) {
    throw ParamOutOfRange("sinusoid_reference: not a sinusoid gait");
  }
  const bool coupled = matching == GaitKind::coupled_sine;
  const double rms_s = coupled ? rms.all : rms.swing;
  const double rms_l = coupled ? rms.all : rms.lift;
  if (!(rms_s > 0.0) || !(rms_l > 0.0)) {
    throw MissingBaselineData("sinusoid_reference: no RMS voltage targets");
  }
  const auto period = static_cast<std::size_t>(std::llround(T / dt));
  if (period < 8 ||
      std::abs(static_cast<double>(period) * dt - T) > 1e-3 * T) {
    throw InvalidTimestep("sinusoid_reference: dt must divide T within 0.1%");
  }
  const double amp_s = std::sqrt(2.0) * rms_s;
  const double amp_l = std::sqrt(2.0) * rms_l;

  SinusoidBaseline out;
  out.ref.period = period;
  out.ref.leg_phase = assign_leg_phases(base_gait);
  out.ref.samples.resize(period);
  out.drive.resize(period);
  const double w = 2.0 * M_PI / T;
  for (std::size_t k = 0; k < period; ++k) {
    const double t = static_cast<double>(k) * dt;
    const double vs = amp_s * std::sin(w * t);
    const double vl = -amp_l * std::cos(w * t);
    out.drive[k] = Eigen::Vector2d(vs, vl);
    const double g = static_gain_mm_per_v;
    out.ref.samples[k] =
        Eigen::Vector4d(g * vs, g * amp_s * w * std::cos(w * t),  //
                        g * vl, g * amp_l * w * std::sin(w * t));
  }
  return out;
}

}  // namespace proprio
