#pragma once

#include <random>

#include <Eigen/Dense>

namespace iiekf::testing {

inline Eigen::VectorXd random_vector(std::mt19937_64& rng, int n, double scale = 1.0) {
  std::normal_distribution<double> normal(0.0, 1.0);
  Eigen::VectorXd v(n);
  for (int i = 0; i < n; ++i) v(i) = scale * normal(rng);
  return v;
}

/// Uniform direction with norm drawn uniformly in [0, max_norm].
inline Eigen::VectorXd random_in_ball(std::mt19937_64& rng, int n, double max_norm) {
  std::uniform_real_distribution<double> uni(0.0, max_norm);
  Eigen::VectorXd v = random_vector(rng, n);
  return v.normalized() * uni(rng);
}

inline Eigen::MatrixXd random_matrix(std::mt19937_64& rng, int rows, int cols) {
  std::normal_distribution<double> normal(0.0, 1.0);
  Eigen::MatrixXd m(rows, cols);
  for (int i = 0; i < rows; ++i)
    for (int j = 0; j < cols; ++j) m(i, j) = normal(rng);
  return m;
}

inline Eigen::MatrixXd random_spd(std::mt19937_64& rng, int n, double floor = 0.1) {
  const Eigen::MatrixXd a = random_matrix(rng, n, n);
  return a * a.transpose() + floor * Eigen::MatrixXd::Identity(n, n);
}

/// Plain Taylor series of the matrix exponential, no scaling.
inline Eigen::MatrixXd taylor_expm(const Eigen::MatrixXd& a, int terms = 80) {
  Eigen::MatrixXd result = Eigen::MatrixXd::Identity(a.rows(), a.cols());
  Eigen::MatrixXd term = result;
  for (int k = 1; k < terms; ++k) {
    term = term * a / static_cast<double>(k);
    result += term;
  }
  return result;
}

}  // namespace iiekf::testing
