#pragma once

#include <Eigen/Dense>
#include <cmath>

#include "proprio/errors.hpp"
#include "proprio/rng.hpp"
#include "proprio/units.hpp"

namespace proprio {

/// Electrical constants of one actuator's drive/measurement circuit.
/// Units: alpha mm/s per mA, R and R_s kOhm, C nF, dt s.
struct SensorParams {
  double alpha = 40.0;
  double R = 1000.0;
  double C = 5.0;
  double R_s = 75.0;
  double beta = 1.57;
  double dt = 4e-4;

  bool valid() const {
    return alpha > 0 && R > 0 && C > 0 && R_s > 0 && beta > 0 && dt > 0;
  }

  // Coefficients of the discrete velocity equation
  //   qdot_k = c1 (Vm_k - V_k) - c2 V_k - c3 (V_k - V_{k-1}),
  // all in mm/s per V.
  double c1() const { return alpha / R_s; }
  double c2() const { return alpha / R; }
  double c3() const {
    return alpha * beta * C * units::kNanofaradVoltPerSecToMilliamp / dt;
  }
};

/// One encoder reading: drive-side voltage before the shunt and actuator
/// voltage after it.
struct EncoderSample {
  double V_m = 0.0;
  double V = 0.0;
};

/// Per-sample noise standard deviations for the simulated encoder. The
/// stacked two-sample covariances used by the filter follow as sigma^2 * I.
struct EncoderNoise {
  Rng* rng = nullptr;
  double sigma_vm = 0.0;
  double sigma_v = 0.0;
};

/// Inverse measurement map of one actuator, in the stacked two-sample form
///   y = [Vm_k, Vm_{k-1}] = H_m [q, qdot_k, qdot_{k-1}] + D_m [V_k, V_{k-1}].
struct MeasurementModel {
  Eigen::Matrix<double, 2, 3> H_m;
  Eigen::Matrix2d D_m;
  Eigen::Matrix2d N_m;
};

/// Mechanical current in mA recovered from circuit measurements. V_dot in
/// V/s is supplied by the caller (the discrete pipeline uses a backward
/// difference).
inline double mechanical_current(const EncoderSample& s, double V_dot,
                                 const SensorParams& p) {
  return (s.V_m - s.V) / p.R_s -
         p.beta * p.C * units::kNanofaradVoltPerSecToMilliamp * V_dot -
         s.V / p.R;
}

/// Forward encoder simulation: given the true tip velocity and the applied
/// voltage, produce the measured voltage pair. Deterministic when noise is
/// disabled or its generator is seeded.
inline EncoderSample simulate_encoder(double qdot_mm_s, double V,
                                      double V_prev, const SensorParams& p,
                                      const EncoderNoise* noise = nullptr) {
  const double cap =
      p.beta * p.C * units::kNanofaradVoltPerSecToMilliamp * (V - V_prev) /
      p.dt;
  EncoderSample s;
  s.V_m = V + p.R_s * (qdot_mm_s / p.alpha + cap + V / p.R);
  s.V = V;
  if (noise != nullptr && noise->rng != nullptr) {
    s.V_m += gaussian(*noise->rng, noise->sigma_vm);
    s.V += gaussian(*noise->rng, noise->sigma_v);
  }
  return s;
}

/// Builds the stacked two-sample measurement model from circuit constants.
/// The second row reuses the (V_k - V_{k-1}) difference for the delayed
/// sample, which keeps the model free of a third voltage input.
inline MeasurementModel build_measurement_model(const SensorParams& p,
                                                const Eigen::Matrix2d& N_H,
                                                const Eigen::Matrix2d& N_D) {
  if (!p.valid()) {
    throw DegenerateParams("build_measurement_model: invalid sensor params");
  }
  const double c1 = p.c1();
  if (c1 == 0.0 || !std::isfinite(c1)) {
    throw DegenerateParams("build_measurement_model: c1 = alpha/R_s is zero");
  }
  const double c2 = p.c2();
  const double c3 = p.c3();

  MeasurementModel m;
  m.H_m << 0.0, 1.0 / c1, 0.0,  //
      0.0, 0.0, 1.0 / c1;
  m.D_m << (c1 + c2 + c3) / c1, -c3 / c1,  //
      c3 / c1, (c1 + c2 - c3) / c1;
  m.N_m = N_H + m.D_m * N_D * m.D_m.transpose();
  return m;
}

}  // namespace proprio
