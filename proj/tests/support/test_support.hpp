#pragma once

#include <cmath>
#include <cstdint>
#include <random>

#include <Eigen/Dense>

#include "sparsectl/synth.hpp"

namespace sparsectl::testing {

// Oracle-side randomness: deliberately not the library generator.
class Rand {
 public:
  explicit Rand(std::uint64_t seed) : gen_(seed) {}

  double normal() { return normal_(gen_); }
  double uniform(double lo, double hi) { return std::uniform_real_distribution<double>(lo, hi)(gen_); }
  int integer(int lo, int hi) { return std::uniform_int_distribution<int>(lo, hi)(gen_); }

  Matrix matrix(Eigen::Index rows, Eigen::Index cols, double scale = 1.0) {
    Matrix M(rows, cols);
    for (Eigen::Index i = 0; i < M.size(); ++i) M.data()[i] = scale * normal();
    return M;
  }

  Vector probs(Eigen::Index n, double lo = 0.05, double hi = 1.0) {
    Vector p(n);
    for (Eigen::Index i = 0; i < n; ++i) p(i) = uniform(lo, hi);
    return p;
  }

  Matrix symmetric(Eigen::Index n) {
    const Matrix M = matrix(n, n);
    return 0.5 * (M + M.transpose());
  }

  // Rejection-sampled plant satisfying both assumptions, often open-loop unstable.
  Plant assumption_plant(int n_min = 2, int n_max = 6) {
    for (;;) {
      const int n = integer(n_min, n_max);
      const int m = integer(1, n);
      const double scale = uniform(0.2, 1.2) / std::sqrt(static_cast<double>(n));
      Plant plant(matrix(n, n, scale), matrix(n, m));
      const auto a_n = plant.a_n();
      if (plant.rank_B() == m && a_n && *a_n < 0.97) return plant;
    }
  }

  std::mt19937_64& engine() { return gen_; }

 private:
  std::mt19937_64 gen_;
  std::normal_distribution<double> normal_{0.0, 1.0};
};

// sqrt(lambda_max(M^T M)) from a symmetric eigensolver.
inline double eig_spectral_norm(const Matrix& M) {
  const Matrix G = M.transpose() * M;
  Eigen::SelfAdjointEigenSolver<Matrix> es(G, Eigen::EigenvaluesOnly);
  return std::sqrt(std::max(0.0, es.eigenvalues().maxCoeff()));
}

inline double min_eigenvalue(const Matrix& S) {
  Eigen::SelfAdjointEigenSolver<Matrix> es(0.5 * (S + S.transpose()), Eigen::EigenvaluesOnly);
  return es.eigenvalues().minCoeff();
}

inline double max_eigenvalue(const Matrix& S) {
  Eigen::SelfAdjointEigenSolver<Matrix> es(0.5 * (S + S.transpose()), Eigen::EigenvaluesOnly);
  return es.eigenvalues().maxCoeff();
}

// Orthogonal projector onto range(B)^perp from a QR factorization.
inline Matrix qr_complement_projector(const Matrix& B) {
  Eigen::HouseholderQR<Matrix> qr(B);
  const Matrix Q = qr.householderQ() * Matrix::Identity(B.rows(), B.cols());
  return Matrix::Identity(B.rows(), B.rows()) - Q * Q.transpose();
}

inline Matrix hand_example_A() { return Eigen::Vector2d(1.5, 0.5).asDiagonal(); }
inline Matrix hand_example_B() { return Eigen::Vector2d(1.0, 0.0); }

}  // namespace sparsectl::testing
