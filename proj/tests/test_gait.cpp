#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <vector>

#include "proprio/gait.hpp"

using proprio::GaitKind;
using proprio::GaitParams;
using proprio::KeyframeSchedule;
using proprio::PeriodicSpline;
using proprio::ReferenceTrajectory;

namespace {

constexpr double kDt = 4e-4;

double pl_swing(const KeyframeSchedule& ks, double phase) {
  std::vector<proprio::detail::Corner> c;
  for (std::size_t i = 0; i < ks.phase.size(); ++i) {
    c.push_back({ks.phase[i], ks.swing_mm[i]});
  }
  return proprio::detail::pl_eval(c, phase);
}

double pl_lift(const KeyframeSchedule& ks, double phase) {
  std::vector<proprio::detail::Corner> c;
  for (std::size_t i = 0; i < ks.phase.size(); ++i) {
    c.push_back({ks.phase[i], ks.lift_mm[i]});
  }
  return proprio::detail::pl_eval(c, phase);
}

}  // namespace

TEST_CASE("trot keyframes shape") {
  GaitParams p;  // S1 = 70, S2 = 25, A = 175 um
  p.T = 0.1;
  const KeyframeSchedule ks = proprio::keyframes_trot(p);

  // Retraction spans exactly S1% at the keyframe level.
  CHECK(pl_swing(ks, 0.0) == Catch::Approx(0.0875));
  CHECK(pl_swing(ks, 0.7) == Catch::Approx(-0.0875));
  CHECK(pl_swing(ks, 0.35) == Catch::Approx(0.0).margin(1e-12));

  // Lift peak is S2% of A_L, centered in the stance window.
  CHECK(pl_lift(ks, 0.35) == Catch::Approx(0.25 * 0.175));
  CHECK(pl_lift(ks, 0.85) == Catch::Approx(-0.175 / 2.0));
}

TEST_CASE("trot with S1=50 gives an isoceles triangle swing") {
  GaitParams p;
  p.S1 = 50.0;
  const KeyframeSchedule ks = proprio::keyframes_trot(p);
  // Symmetric slopes around the turning points.
  const double up = pl_swing(ks, 0.75);
  const double dn = pl_swing(ks, 0.25);
  CHECK(up == Catch::Approx(0.0).margin(1e-12));
  CHECK(dn == Catch::Approx(0.0).margin(1e-12));
  // Even symmetry about the apex at phase 0.
  CHECK(pl_swing(ks, 0.1) == Catch::Approx(pl_swing(ks, 0.9)).margin(1e-12));
}

TEST_CASE("reduced adduction pushes the stance level below the trough") {
  GaitParams p;
  p.S2 = -75.0;
  const KeyframeSchedule ks = proprio::keyframes_trot(p);
  CHECK(pl_lift(ks, p.S1 / 200.0) == Catch::Approx(-0.75 * 0.175));
}

TEST_CASE("pronk keyframes shape") {
  GaitParams p = GaitParams::pronk_default();  // S1 = 50, S3 = 80
  const KeyframeSchedule ks = proprio::keyframes_pronk(p);
  CHECK(pl_lift(ks, 0.4) == Catch::Approx(0.075));    // adducted plateau
  CHECK(pl_lift(ks, 0.9) == Catch::Approx(-0.075));   // abducted plateau

  GaitParams half = p;
  half.S3 = 50.0;
  const KeyframeSchedule ks2 = proprio::keyframes_pronk(half);
  CHECK(pl_lift(ks2, 0.25) == Catch::Approx(0.075));
  CHECK(pl_lift(ks2, 0.75) == Catch::Approx(-0.075));
}

TEST_CASE("gait parameter validation") {
  GaitParams p;
  p.T = 1.0;  // 1 Hz, outside the band
  CHECK_THROWS_AS(proprio::keyframes_trot(p), proprio::ParamOutOfRange);
  p.T = 0.05;
  p.S1 = 45.0;
  CHECK_THROWS_AS(proprio::keyframes_trot(p), proprio::ParamOutOfRange);
  p.S1 = 70.0;
  p.S2 = 30.0;
  CHECK_THROWS_AS(proprio::keyframes_trot(p), proprio::ParamOutOfRange);
  CHECK_THROWS_AS(proprio::keyframes_pronk(p), proprio::ParamOutOfRange);
}

TEST_CASE("periodic spline reproduces a sampled sine") {
  const double T = 0.1;
  std::vector<double> t, y;
  const int m = 16;
  for (int i = 0; i < m; ++i) {
    const double ph = static_cast<double>(i) / m;
    t.push_back(ph * T);
    y.push_back(std::sin(2.0 * M_PI * ph));
  }
  const PeriodicSpline sp(t, y, T);
  double rms = 0.0;
  int n = 0;
  for (double tt = 0.0; tt < T; tt += T / 1000.0) {
    const auto [v, d] = sp.eval(tt);
    const double truth = std::sin(2.0 * M_PI * tt / T);
    rms += (v - truth) * (v - truth);
    ++n;
  }
  rms = std::sqrt(rms / n);
  CHECK(rms < 0.01);  // 1% of unit amplitude

  // C0/C1 periodicity across the seam.
  const auto [v0, d0] = sp.eval(0.0);
  const auto [vT, dT] = sp.eval(T);
  CHECK(v0 == Catch::Approx(vT).margin(1e-12));
  CHECK(d0 == Catch::Approx(dT).margin(1e-9));
}

TEST_CASE("spline_reference sampling and periodicity") {
  GaitParams p;  // 10 Hz trot
  const ReferenceTrajectory ref =
      proprio::spline_reference(proprio::keyframes_trot(p), p.T, kDt);
  CHECK(ref.period == 250);

  // Wrap consistency: the spline agrees with itself one period later.
  const auto [q0, qd0] = ref.swing.eval(0.0);
  const auto [qT, qdT] = ref.swing.eval(p.T);
  CHECK(q0 == Catch::Approx(qT).margin(1e-9));
  CHECK(qd0 == Catch::Approx(qdT).margin(1e-9));

  // Velocity samples are the analytic derivative.
  for (std::size_t k = 0; k < ref.period; k += 17) {
    const auto [q, qd] = ref.swing.eval(static_cast<double>(k) * kDt);
    CHECK(ref.samples[k](0) == Catch::Approx(q).margin(1e-15));
    CHECK(ref.samples[k](1) == Catch::Approx(qd).margin(1e-12));
  }

  // A constant schedule splines to a constant.
  KeyframeSchedule flat;
  flat.phase = {0.0, 0.5};
  flat.swing_mm = {0.02, 0.02};
  flat.lift_mm = {-0.01, -0.01};
  const ReferenceTrajectory cref = proprio::spline_reference(flat, 0.1, kDt);
  for (const auto& s : cref.samples) {
    CHECK(s(0) == Catch::Approx(0.02).margin(1e-12));
    CHECK(s(1) == Catch::Approx(0.0).margin(1e-9));
    CHECK(s(2) == Catch::Approx(-0.01).margin(1e-12));
  }

  CHECK_THROWS_AS(
      proprio::spline_reference(proprio::keyframes_trot(p), 1.0 / 30.0, kDt),
      proprio::InvalidTimestep);
}

TEST_CASE("retraction fraction tracks S1 after splining") {
  for (double s1 : {50.0, 60.0, 70.0, 80.0}) {
    for (double T : {0.1, 0.02}) {
      GaitParams p;
      p.S1 = s1;
      p.T = T;
      const ReferenceTrajectory ref =
          proprio::spline_reference(proprio::keyframes_trot(p), p.T, kDt);
      // Measure on the continuous spline so the sample grid does not
      // quantize the fraction at high stride frequencies.
      const int fine = 20000;
      int neg = 0;
      for (int k = 0; k < fine; ++k) {
        const double t = T * static_cast<double>(k) / fine;
        if (ref.swing.eval(t).second < 0.0) ++neg;
      }
      const double frac = static_cast<double>(neg) / fine;
      INFO("S1=" << s1 << " T=" << T);
      CHECK(std::abs(frac - s1 / 100.0) <= 0.02);
    }
  }
}

TEST_CASE("spline overshoot stays within 5% of amplitude") {
  for (double s1 : {50.0, 80.0}) {
    GaitParams p;
    p.S1 = s1;
    const ReferenceTrajectory ref =
        proprio::spline_reference(proprio::keyframes_trot(p), p.T, kDt);
    double max_s = 0.0, max_l = 0.0;
    for (const auto& s : ref.samples) {
      max_s = std::max(max_s, std::abs(s(0)));
      max_l = std::max(max_l, std::abs(s(2)));
    }
    CHECK(max_s <= 0.5 * 0.175 * 1.05);
    CHECK(max_l <= 0.5 * 0.175 * 1.05);
  }
}

TEST_CASE("changing S2 only touches the lift channel") {
  GaitParams a, b;
  a.S2 = 25.0;
  b.S2 = -50.0;
  const ReferenceTrajectory ra =
      proprio::spline_reference(proprio::keyframes_trot(a), a.T, kDt);
  const ReferenceTrajectory rb =
      proprio::spline_reference(proprio::keyframes_trot(b), b.T, kDt);
  REQUIRE(ra.period == rb.period);
  for (std::size_t k = 0; k < ra.period; ++k) {
    CHECK(ra.samples[k](0) == rb.samples[k](0));
    CHECK(ra.samples[k](1) == rb.samples[k](1));
  }
}

TEST_CASE("pronk S3 mirror property") {
  GaitParams a = GaitParams::pronk_default(), b = a;
  a.S3 = 20.0;
  b.S3 = 80.0;
  a.T = b.T = 0.1;
  const ReferenceTrajectory ra =
      proprio::spline_reference(proprio::keyframes_pronk(a), a.T, kDt);
  const ReferenceTrajectory rb =
      proprio::spline_reference(proprio::keyframes_pronk(b), b.T, kDt);
  // Time-reversed complements: lift_80(t) = -lift_20(-t).
  double worst = 0.0;
  for (std::size_t k = 0; k < rb.period; ++k) {
    const double t = static_cast<double>(k) * kDt;
    const auto [v80, d80] = rb.lift.eval(t);
    const auto [v20, d20] = ra.lift.eval(-t);
    worst = std::max(worst, std::abs(v80 + v20));
  }
  CHECK(worst < 1e-9);
}

TEST_CASE("leg phase assignment") {
  const auto trot = proprio::assign_leg_phases(GaitKind::trot);
  CHECK(trot[0] == 0.0);
  CHECK(trot[1] == 0.5);
  CHECK(trot[2] == 0.5);
  CHECK(trot[3] == 0.0);
  CHECK(proprio::steps_per_stride(trot) == 2);

  const auto pronk = proprio::assign_leg_phases(GaitKind::pronk);
  for (double p : pronk) CHECK(p == 0.0);
  CHECK(proprio::steps_per_stride(pronk) == 1);
}

TEST_CASE("reference indexing honors per-leg phase offsets") {
  GaitParams p;
  ReferenceTrajectory ref =
      proprio::spline_reference(proprio::keyframes_trot(p), p.T, kDt);
  ref.leg_phase = proprio::assign_leg_phases(GaitKind::trot);
  CHECK(ref.leg_index(0, 10) == 10);
  CHECK(ref.leg_index(1, 10) == (10 + 125) % 250);
  CHECK(ref.leg_index(3, 240) == 240);
}

TEST_CASE("sinusoid baselines") {
  proprio::BaselineRms rms;
  rms.all = 20.0;
  rms.swing = 10.0;
  rms.lift = 20.0;

  SECTION("coupled uses one amplitude everywhere") {
    const auto base = proprio::sinusoid_reference(
        GaitKind::coupled_sine, rms, GaitKind::pronk, 0.1, kDt, 0.004);
    double pk_s = 0.0, pk_l = 0.0;
    for (const auto& d : base.drive) {
      pk_s = std::max(pk_s, std::abs(d(0)));
      pk_l = std::max(pk_l, std::abs(d(1)));
    }
    CHECK(pk_s == Catch::Approx(std::sqrt(2.0) * 20.0).epsilon(1e-3));
    CHECK(pk_l == Catch::Approx(std::sqrt(2.0) * 20.0).epsilon(1e-3));
    // Pronk phasing: all legs share index 0 offsets.
    for (double ph : base.ref.leg_phase) CHECK(ph == 0.0);
  }

  SECTION("decoupled respects per-DOF RMS; 2x lift gives 2x amplitude") {
    const auto base = proprio::sinusoid_reference(
        GaitKind::decoupled_sine, rms, GaitKind::trot, 0.1, kDt, 0.004);
    double pk_s = 0.0, pk_l = 0.0;
    for (const auto& d : base.drive) {
      pk_s = std::max(pk_s, std::abs(d(0)));
      pk_l = std::max(pk_l, std::abs(d(1)));
    }
    CHECK(pk_l == Catch::Approx(2.0 * pk_s).epsilon(1e-3));
    CHECK(base.ref.leg_phase[1] == 0.5);
  }

  SECTION("verifies the drive RMS actually matches the target") {
    const auto base = proprio::sinusoid_reference(
        GaitKind::coupled_sine, rms, GaitKind::pronk, 0.1, kDt, 0.004);
    double s2 = 0.0;
    for (const auto& d : base.drive) s2 += d(0) * d(0);
    const double measured =
        std::sqrt(s2 / static_cast<double>(base.drive.size()));
    CHECK(measured == Catch::Approx(20.0).epsilon(1e-6));
  }

  SECTION("missing targets are rejected") {
    proprio::BaselineRms none;
    CHECK_THROWS_AS(
        proprio::sinusoid_reference(GaitKind::coupled_sine, none,
                                    GaitKind::trot, 0.1, kDt, 0.004),
        proprio::MissingBaselineData);
  }
}
