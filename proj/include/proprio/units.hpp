#pragma once

namespace proprio::units {

// Project-wide unit convention: mm, mN, V, mA, kOhm, nF, s (and g for mass).
// All cross-system conversion factors live here; formulas elsewhere are
// written in these units and multiply by exactly one named constant when two
// unit systems meet.

// Standard gravity, 9.81 m/s^2 expressed in mm/s^2.
inline constexpr double kGravityMmPerS2 = 9810.0;
inline constexpr double kGravityMPerS2 = 9.81;

// Capacitive current: C[nF] * dV/dt[V/s] is in nA; 1 nA = 1e-6 mA.
inline constexpr double kNanofaradVoltPerSecToMilliamp = 1e-6;

// Newton's law with mass in grams: F[mN] = 1e-3 * m[g] * a[mm/s^2],
// so a[mm/s^2] = kForceToAccel * F[mN] / m[g].
inline constexpr double kForceToAccel = 1e3;

// Torque about a body axis: tau[mN*mm] / I[g*mm^2] gives 1e3 rad/s^2.
inline constexpr double kTorqueToAngAccel = 1e3;

// Mechanical power m[g] * g[m/s^2] * v[mm/s] in mW (1 g*m/s^2*mm/s = 1e-3 mW).
inline constexpr double kGramMetersPerS2MmPerSToMilliwatt = 1e-3;

}  // namespace proprio::units
