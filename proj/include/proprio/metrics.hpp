#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <limits>
#include <span>
#include <string>
#include <vector>

#include "proprio/errors.hpp"
#include "proprio/gait.hpp"
#include "proprio/units.hpp"

namespace proprio {

/// Per-leg columns of a trial trace, one entry per control tick.
struct LegSeries {
  std::vector<double> q_s, qd_s, q_l, qd_l;                  // plant truth
  std::vector<double> est_q_s, est_qd_s, est_q_l, est_qd_l;  // filter
  std::vector<double> ref_q_s, ref_qd_s, ref_q_l, ref_qd_l;  // reference
  std::vector<double> cmd_v_s, cmd_v_l;                      // commanded V
  std::vector<double> vm_s, vm_l;          // measured V_m per axis
  std::vector<double> v_s, v_l;            // measured V per axis
  std::vector<double> im_s, im_l;          // mechanical current, mA
  std::vector<double> tip_x, tip_z, tip_vx;  // world frame
  std::vector<std::uint8_t> contact;
};

/// Whole-trial time series at the control rate plus the bookkeeping the
/// metrics need. stride_samples is the quantized stride period.
struct TrialTrace {
  double dt = 4e-4;
  std::size_t stride_samples = 0;
  int transient_strides = 2;
  GaitParams gait;
  std::array<double, 4> leg_phase{0, 0, 0, 0};
  bool has_contact_data = true;

  std::vector<double> t, x_b, z_b, th_b, vx_b, vz_b, om_b;
  std::array<LegSeries, 4> legs;

  std::size_t size() const { return t.size(); }
};

struct AnalysisWindow {
  std::size_t start = 0;
  std::size_t n_strides = 0;
  std::size_t end = 0;  // start + n_strides * stride_samples, inclusive index
};

/// Largest whole-stride window after the transient strides.
inline AnalysisWindow analysis_window(const TrialTrace& tr) {
  if (tr.stride_samples == 0 || tr.size() == 0) {
    throw EmptyTrace("analysis_window: empty trace");
  }
  AnalysisWindow w;
  w.start = static_cast<std::size_t>(tr.transient_strides) * tr.stride_samples;
  if (w.start + tr.stride_samples >= tr.size()) {
    throw EmptyTrace("analysis_window: trace shorter than one whole stride");
  }
  w.n_strides = (tr.size() - 1 - w.start) / tr.stride_samples;
  w.end = w.start + w.n_strides * tr.stride_samples;
  return w;
}

/// Sign of the net body displacement over the analysis window.
inline double heading_sign(const TrialTrace& tr) {
  const AnalysisWindow w = analysis_window(tr);
  return (tr.x_b[w.end] - tr.x_b[w.start]) >= 0.0 ? 1.0 : -1.0;
}

/// Mean body x-velocity over whole strides, mm/s (signed).
inline double mean_speed(const TrialTrace& tr) {
  const AnalysisWindow w = analysis_window(tr);
  const double duration =
      static_cast<double>(w.end - w.start) * tr.dt;
  return (tr.x_b[w.end] - tr.x_b[w.start]) / duration;
}

/// nu = v / (L_s * n * f): speed normalized by the kinematic speed limit.
inline double normalized_speed(const TrialTrace& tr, double L_s = 4.7) {
  const double f =
      1.0 / (static_cast<double>(tr.stride_samples) * tr.dt);
  const int n = steps_per_stride(tr.leg_phase);
  return mean_speed(tr) / (L_s * n * f);
}

/// sigma = 1 - slip distance per stride / (4 L_s), clamped to [0, 1].
/// Slip is integrated by the rectangle rule over in-contact samples whose
/// tip velocity opposes the heading.
inline double step_effectiveness(const TrialTrace& tr, double L_s = 4.7) {
  if (!tr.has_contact_data) {
    throw MissingContactData("step_effectiveness: trace has no contact data");
  }
  const AnalysisWindow w = analysis_window(tr);
  const double heading = heading_sign(tr);
  double slip = 0.0;
  for (const LegSeries& leg : tr.legs) {
    for (std::size_t k = w.start; k < w.end; ++k) {
      if (leg.contact[k] != 0 && leg.tip_vx[k] * heading < 0.0) {
        slip += std::abs(leg.tip_vx[k]) * tr.dt;
      }
    }
  }
  const double per_stride = slip / static_cast<double>(w.n_strides);
  return std::clamp(1.0 - per_stride / (4.0 * L_s), 0.0, 1.0);
}

/// epsilon = m g v / sum_i mean(i_m * V_m): mechanical output power over
/// total electrical power. Negative speed is reported raw.
inline double locomotion_economy(const TrialTrace& tr, double mass_g = 1.43) {
  const AnalysisWindow w = analysis_window(tr);
  double power_mw = 0.0;
  const auto count = static_cast<double>(w.end - w.start);
  for (const LegSeries& leg : tr.legs) {
    double acc_s = 0.0, acc_l = 0.0;
    for (std::size_t k = w.start; k < w.end; ++k) {
      acc_s += leg.im_s[k] * leg.vm_s[k];
      acc_l += leg.im_l[k] * leg.vm_l[k];
    }
    power_mw += (acc_s + acc_l) / count;
  }
  if (!(std::abs(power_mw) > 1e-12)) {
    throw ZeroElectricalPower("locomotion_economy: no electrical power");
  }
  const double mech_mw = units::kGramMetersPerS2MmPerSToMilliwatt * mass_g *
                         units::kGravityMPerS2 * mean_speed(tr);
  return mech_mw / power_mw;
}

/// Per-cycle RMS error normalized by the reference's per-cycle peak-to-peak
/// amplitude, averaged over the cycles.
inline double normalized_rms_error(std::span<const double> actual,
                                   std::span<const double> reference,
                                   std::size_t cycles) {
  if (cycles == 0 || actual.size() != reference.size() ||
      actual.size() < cycles || actual.size() % cycles != 0) {
    throw EmptyTrace("normalized_rms_error: length not a cycle multiple");
  }
  const std::size_t len = actual.size() / cycles;
  double total = 0.0;
  for (std::size_t c = 0; c < cycles; ++c) {
    double err2 = 0.0;
    double lo = std::numeric_limits<double>::infinity();
    double hi = -std::numeric_limits<double>::infinity();
    for (std::size_t k = 0; k < len; ++k) {
      const double a = actual[c * len + k];
      const double r = reference[c * len + k];
      err2 += (a - r) * (a - r);
      lo = std::min(lo, r);
      hi = std::max(hi, r);
    }
    const double pkpk = hi - lo;
    if (!(pkpk > 0.0)) {
      throw DegenerateReference(
          "normalized_rms_error: reference peak-to-peak is zero");
    }
    total += std::sqrt(err2 / static_cast<double>(len)) / pkpk;
  }
  return total / static_cast<double>(cycles);
}

/// Locomotion and estimation metrics of one trial.
struct MetricsRecord {
  double nu = 0.0;
  double sigma = 0.0;
  double epsilon = 0.0;
  double cot = std::numeric_limits<double>::quiet_NaN();
  double E_est_swing = 0.0, E_est_lift = 0.0;
  double E_cont_swing = 0.0, E_cont_lift = 0.0;
  bool backward = false;
  bool nu_gt_1 = false;
  bool saturated = false;
  bool diverged = false;

  std::string flag_string() const {
    std::string s;
    auto add = [&s](const char* f) {
      if (!s.empty()) s += '|';
      s += f;
    };
    if (saturated) add("sat");
    if (diverged) add("div");
    if (backward) add("bwd");
    if (nu_gt_1) add("nu>1");
    if (s.empty()) s = "-";
    return s;
  }
};

namespace detail {

inline double window_nrmse(const TrialTrace& tr,
                           const std::vector<double>& actual,
                           const std::vector<double>& reference) {
  const AnalysisWindow w = analysis_window(tr);
  const std::span<const double> a(actual.data() + w.start,
                                  w.end - w.start);
  const std::span<const double> r(reference.data() + w.start,
                                  w.end - w.start);
  return normalized_rms_error(a, r, w.n_strides);
}

}  // namespace detail

/// Assembles the full record. Estimation errors compare the estimate
/// against the plant truth; tracking errors compare the estimate against
/// the reference, both normalized per stride.
inline MetricsRecord compute_metrics(const TrialTrace& tr, double L_s = 4.7,
                                     double mass_g = 1.43) {
  MetricsRecord m;
  m.nu = normalized_speed(tr, L_s);
  m.sigma = tr.has_contact_data ? step_effectiveness(tr, L_s) : 0.0;
  m.epsilon = locomotion_economy(tr, mass_g);
  m.cot = m.epsilon > 0.0 ? 1.0 / m.epsilon
                          : std::numeric_limits<double>::quiet_NaN();
  double est_s = 0.0, est_l = 0.0, con_s = 0.0, con_l = 0.0;
  for (const LegSeries& leg : tr.legs) {
    est_s += detail::window_nrmse(tr, leg.est_q_s, leg.q_s);
    est_l += detail::window_nrmse(tr, leg.est_q_l, leg.q_l);
    con_s += detail::window_nrmse(tr, leg.est_q_s, leg.ref_q_s);
    con_l += detail::window_nrmse(tr, leg.est_q_l, leg.ref_q_l);
  }
  m.E_est_swing = est_s / 4.0;
  m.E_est_lift = est_l / 4.0;
  m.E_cont_swing = con_s / 4.0;
  m.E_cont_lift = con_l / 4.0;
  m.backward = heading_sign(tr) < 0.0;
  m.nu_gt_1 = m.nu > 1.0;
  return m;
}

}  // namespace proprio
