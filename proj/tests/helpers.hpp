#pragma once

#include <Eigen/Dense>
#include <random>

#include "proprio/dare.hpp"

namespace test_helpers {

// Random discrete-time system with spectral radius strictly below rho_max.
// Deterministic for a given generator state.
inline Eigen::MatrixXd random_stable_A(std::mt19937_64& rng, int n,
                                       double rho_max = 0.95) {
  std::normal_distribution<double> gauss(0.0, 1.0);
  Eigen::MatrixXd A(n, n);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) A(i, j) = gauss(rng);
  const double rho = proprio::spectral_radius(A);
  std::uniform_real_distribution<double> scale(0.2, rho_max);
  if (rho > 0.0) A *= scale(rng) / rho;
  return A;
}

inline Eigen::MatrixXd random_matrix(std::mt19937_64& rng, int rows,
                                     int cols) {
  std::normal_distribution<double> gauss(0.0, 1.0);
  Eigen::MatrixXd M(rows, cols);
  for (int i = 0; i < rows; ++i)
    for (int j = 0; j < cols; ++j) M(i, j) = gauss(rng);
  return M;
}

inline Eigen::MatrixXd random_psd(std::mt19937_64& rng, int n) {
  Eigen::MatrixXd M = random_matrix(rng, n, n);
  return M * M.transpose();
}

inline Eigen::MatrixXd random_pd(std::mt19937_64& rng, int n,
                                 double floor = 0.1) {
  return random_psd(rng, n) +
         floor * Eigen::MatrixXd::Identity(n, n);
}

}  // namespace test_helpers
