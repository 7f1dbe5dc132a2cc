#pragma once

#include <Eigen/Dense>

#include <string_view>

namespace sparsectl {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;

namespace linops {

// Matrices with more than this many rows or columns use power iteration
// for the spectral norm instead of a full SVD.
inline constexpr Eigen::Index kDenseSvdLimit = 256;
inline constexpr double kPowerIterationTol = 1e-12;
inline constexpr int kPowerIterationMaxIter = 10'000;
inline constexpr double kDefaultRankTol = 1e-10;
inline constexpr double kMaxGramCondition = 1e12;

// Throws InvalidInput when M has a zero dimension or a non-finite entry.
void require_finite(const Matrix& M, std::string_view what);

// Largest singular value of M.
[[nodiscard]] double spectral_norm(const Matrix& M);

// Power-iteration estimate of the largest singular value, exposed so that
// tests and benchmarks can exercise the large-matrix path directly.
[[nodiscard]] double spectral_norm_power(const Matrix& M);

// Number of singular values exceeding tol * sigma_max.
[[nodiscard]] Eigen::Index rank_of(const Matrix& M, double tol = kDefaultRankTol);

// Cholesky test on the symmetric part (M + M^T) / 2.
[[nodiscard]] bool is_positive_definite(const Matrix& M);

// Orthogonal projector onto range(B)^perp and the projected open-loop
// dynamics. a_n = ||P A||_2 is the quantity bounded by Assumption 2.
struct ProjectedDynamics {
  Matrix P;
  Matrix PA;
  double a_n = 0.0;
};

// Throws RankDeficient when cond(B^T B) exceeds kMaxGramCondition.
[[nodiscard]] ProjectedDynamics projected_dynamics(const Matrix& A, const Matrix& B);

// (B^T B)^{-1} B^T A via a Cholesky solve; the least-squares gain direction.
[[nodiscard]] Matrix pseudo_inverse_times(const Matrix& B, const Matrix& A);

}  // namespace linops
}  // namespace sparsectl
