#include <catch2/catch_amalgamated.hpp>

#include <Eigen/Dense>
#include <cmath>

#include "helpers.hpp"
#include "proprio/dare.hpp"

using Eigen::MatrixXd;
using proprio::DareProblem;
using proprio::dare_residual;
using proprio::solve_dare;
using proprio::spectral_radius;

TEST_CASE("spectral_radius on known matrices") {
  CHECK(spectral_radius(MatrixXd::Identity(2, 2)) == Catch::Approx(1.0));

  MatrixXd D = MatrixXd::Zero(2, 2);
  D(0, 0) = 0.3;
  D(1, 1) = -0.8;
  CHECK(spectral_radius(D) == Catch::Approx(0.8));

  // Companion form of lambda^2 + 0.25 = 0: eigenvalues +-0.5i.
  MatrixXd C(2, 2);
  C << 0.0, 1.0, -0.25, 0.0;
  CHECK(spectral_radius(C) == Catch::Approx(0.5).epsilon(1e-9));
}

TEST_CASE("spectral_radius rejects bad input") {
  CHECK_THROWS_AS(spectral_radius(MatrixXd::Zero(2, 3)),
                  proprio::DimensionMismatch);
  MatrixXd bad = MatrixXd::Zero(2, 2);
  bad(0, 0) = std::nan("");
  CHECK_THROWS_AS(spectral_radius(bad), proprio::NonFinite);
}

TEST_CASE("solve_dare with A = 0 returns Q") {
  std::mt19937_64 rng(11);
  for (int n : {1, 3, 5}) {
    DareProblem p;
    p.A = MatrixXd::Zero(n, n);
    p.B = test_helpers::random_matrix(rng, n, 2);
    p.Q = test_helpers::random_psd(rng, n);
    p.R = test_helpers::random_pd(rng, 2);
    const MatrixXd X = solve_dare(p);
    CHECK((X - p.Q).norm() < 1e-12 * std::max(1.0, p.Q.norm()));
  }
}

TEST_CASE("solve_dare zero cost admits zero solution") {
  std::mt19937_64 rng(12);
  DareProblem p;
  p.A = test_helpers::random_stable_A(rng, 4, 0.9);
  p.B = test_helpers::random_matrix(rng, 4, 2);
  p.Q = MatrixXd::Zero(4, 4);
  p.R = test_helpers::random_pd(rng, 2);
  CHECK(solve_dare(p).norm() < 1e-12);
}

TEST_CASE("solve_dare scalar closed form") {
  DareProblem p;
  p.A = MatrixXd::Constant(1, 1, 0.5);
  p.B = MatrixXd::Constant(1, 1, 1.0);
  p.Q = MatrixXd::Constant(1, 1, 1.0);
  p.R = MatrixXd::Constant(1, 1, 1.0);
  const double x = solve_dare(p)(0, 0);
  // Positive root of X^2 - 0.25 X - 1 = 0, solved independently here.
  const double root = (0.25 + std::sqrt(0.25 * 0.25 + 4.0)) / 2.0;
  CHECK(x == Catch::Approx(root).margin(1e-10));
  CHECK(x * x - 0.25 * x - 1.0 == Catch::Approx(0.0).margin(1e-9));
}

TEST_CASE("solve_dare random stabilizable systems: residual, symmetry, PSD, "
          "closed-loop stability") {
  std::mt19937_64 rng(2024);
  for (int trial = 0; trial < 25; ++trial) {
    const int n = 1 + static_cast<int>(rng() % 6);
    const int m = 1 + static_cast<int>(rng() % 3);
    DareProblem p;
    p.A = test_helpers::random_stable_A(rng, n);
    p.B = test_helpers::random_matrix(rng, n, m);
    p.Q = test_helpers::random_psd(rng, n);
    p.R = test_helpers::random_pd(rng, m);

    const MatrixXd X = solve_dare(p);
    CHECK(dare_residual(p, X) < 1e-9);
    CHECK((X - X.transpose()).norm() < 1e-12 * std::max(1.0, X.norm()));
    Eigen::SelfAdjointEigenSolver<MatrixXd> eig(X);
    CHECK(eig.eigenvalues().minCoeff() > -1e-10 * std::max(1.0, X.norm()));

    const MatrixXd gain_den = p.R + p.B.transpose() * X * p.B;
    const MatrixXd L =
        gain_den.ldlt().solve(p.B.transpose() * X * p.A);
    CHECK(spectral_radius(p.A - p.B * L) < 1.0);
  }
}

TEST_CASE("solve_dare deterministic for identical inputs") {
  std::mt19937_64 rng(77);
  DareProblem p;
  p.A = test_helpers::random_stable_A(rng, 4);
  p.B = test_helpers::random_matrix(rng, 4, 2);
  p.Q = test_helpers::random_psd(rng, 4);
  p.R = test_helpers::random_pd(rng, 2);
  const MatrixXd X1 = solve_dare(p);
  const MatrixXd X2 = solve_dare(p);
  CHECK((X1 - X2).norm() == 0.0);
}

TEST_CASE("solve_dare input validation") {
  DareProblem p;
  p.A = MatrixXd::Identity(3, 3);
  p.B = MatrixXd::Ones(2, 1);  // wrong row count
  p.Q = MatrixXd::Identity(3, 3);
  p.R = MatrixXd::Identity(1, 1);
  CHECK_THROWS_AS(solve_dare(p), proprio::DimensionMismatch);

  p.B = MatrixXd::Ones(3, 1);
  p.R = MatrixXd::Zero(1, 1);  // not PD
  CHECK_THROWS_AS(solve_dare(p), proprio::IllConditioned);

  p.R = MatrixXd::Identity(1, 1);
  p.Q = -MatrixXd::Identity(3, 3);  // not PSD
  CHECK_THROWS_AS(solve_dare(p), proprio::IllConditioned);
}

TEST_CASE("solve_dare reports non-convergence for an unstabilizable pair") {
  // Unstable mode with no input authority: the doubling iterate blows up
  // or stalls; either way the caller gets NonConvergence.
  DareProblem p;
  p.A = MatrixXd::Zero(2, 2);
  p.A(0, 0) = 1.5;
  p.A(1, 1) = 0.5;
  p.B = MatrixXd::Zero(2, 1);
  p.B(1, 0) = 1.0;  // only the stable mode is actuated
  p.Q = MatrixXd::Identity(2, 2);
  p.R = MatrixXd::Identity(1, 1);
  CHECK_THROWS_AS(solve_dare(p, 1e-10, 200), proprio::NonConvergence);
}
