#include <gtest/gtest.h>

#include "sparsectl/errors.hpp"
#include "sparsectl/linops.hpp"
#include "sparsectl/models.hpp"
#include "test_support.hpp"

namespace sparsectl {
namespace {

using linops::is_positive_definite;
using linops::projected_dynamics;
using linops::rank_of;
using linops::spectral_norm;
using testing::Rand;

TEST(SpectralNorm, Identity) {
  for (int n : {1, 3, 10}) EXPECT_DOUBLE_EQ(spectral_norm(Matrix::Identity(n, n)), 1.0);
}

TEST(SpectralNorm, DiagonalIsMaxAbsEntry) {
  EXPECT_NEAR(spectral_norm(Eigen::Vector2d(3.0, -4.0).asDiagonal().toDenseMatrix()), 4.0, 1e-15);
}

TEST(SpectralNorm, MatchesEigenvalueOracleOnRandom5x3) {
  Rand rnd(11);
  for (int trial = 0; trial < 50; ++trial) {
    const Matrix M = rnd.matrix(5, 3);
    EXPECT_NEAR(spectral_norm(M), testing::eig_spectral_norm(M), 1e-9);
  }
}

TEST(SpectralNorm, TransposeInvariant) {
  Rand rnd(12);
  for (int trial = 0; trial < 50; ++trial) {
    const Matrix M = rnd.matrix(rnd.integer(1, 9), rnd.integer(1, 9));
    EXPECT_NEAR(spectral_norm(M), spectral_norm(M.transpose()), 1e-10);
  }
}

TEST(SpectralNorm, Submultiplicative) {
  Rand rnd(13);
  for (int trial = 0; trial < 200; ++trial) {
    const int a = rnd.integer(1, 7), b = rnd.integer(1, 7), c = rnd.integer(1, 7);
    const Matrix M = rnd.matrix(a, b);
    const Matrix N = rnd.matrix(b, c);
    EXPECT_LE(spectral_norm(M * N), spectral_norm(M) * spectral_norm(N) + 1e-9);
  }
}

TEST(SpectralNorm, PowerIterationAgreesWithSvd) {
  Rand rnd(14);
  for (auto [r, c] : {std::pair{40, 7}, std::pair{7, 40}, std::pair{30, 30}}) {
    const Matrix M = rnd.matrix(r, c);
    EXPECT_NEAR(linops::spectral_norm_power(M), testing::eig_spectral_norm(M), 1e-8);
  }
}

TEST(SpectralNorm, LargeMatrixUsesPowerPath) {
  Rand rnd(15);
  const Matrix M = rnd.matrix(300, 12);
  EXPECT_NEAR(spectral_norm(M), testing::eig_spectral_norm(M), 1e-8);
  EXPECT_DOUBLE_EQ(spectral_norm(M), linops::spectral_norm_power(M));
}

TEST(SpectralNorm, RejectsNonFiniteAndEmpty) {
  Matrix M = Matrix::Identity(2, 2);
  M(1, 0) = std::nan("");
  EXPECT_THROW((void)spectral_norm(M), InvalidInput);
  EXPECT_THROW((void)spectral_norm(Matrix(0, 3)), InvalidInput);
}

TEST(RankOf, Identity) { EXPECT_EQ(rank_of(Matrix::Identity(6, 6)), 6); }

TEST(RankOf, DuplicatedColumn) {
  Rand rnd(21);
  Matrix M(5, 3);
  M.col(0) = rnd.matrix(5, 1);
  M.col(1) = M.col(0);
  M.col(2) = rnd.matrix(5, 1);
  EXPECT_EQ(rank_of(M), 2);
}

TEST(RankOf, ConverterInputMatrix) {
  const Plant plant = models::converter();
  Eigen::JacobiSVD<Matrix> svd(plant.B());
  const Vector sv = svd.singularValues();
  EXPECT_GT(sv(1), 1e-6 * sv(0));
  EXPECT_EQ(rank_of(plant.B()), 2);
}

TEST(IsPositiveDefinite, Identity) { EXPECT_TRUE(is_positive_definite(Matrix::Identity(4, 4))); }

TEST(IsPositiveDefinite, SemidefiniteBoundary) {
  EXPECT_FALSE(is_positive_definite(Eigen::Vector2d(1.0, 0.0).asDiagonal().toDenseMatrix()));
}

TEST(IsPositiveDefinite, AgreesWithEigenvalueSign) {
  Rand rnd(31);
  int checked = 0;
  for (int trial = 0; trial < 1000; ++trial) {
    const int n = rnd.integer(1, 6);
    // Shift toward the boundary so both verdicts occur often.
    Matrix S = rnd.symmetric(n);
    S += rnd.uniform(-1.0, 2.5) * Matrix::Identity(n, n);
    const double lmin = testing::min_eigenvalue(S);
    if (std::abs(lmin) < 1e-8) continue;
    ++checked;
    EXPECT_EQ(is_positive_definite(S), lmin > 0.0) << "lambda_min = " << lmin;
  }
  EXPECT_GT(checked, 990);
}

TEST(IsPositiveDefinite, UsesSymmetricPart) {
  Matrix M(2, 2);
  M << 1.0, 10.0, -10.0, 1.0;  // skew part does not affect x^T M x
  EXPECT_TRUE(is_positive_definite(M));
  EXPECT_THROW((void)is_positive_definite(Matrix(2, 3)), InvalidInput);
}

TEST(ProjectedDynamics, FullRankSquareInput) {
  Rand rnd(41);
  const Matrix A = rnd.matrix(4, 4, 3.0);
  const auto pd = projected_dynamics(A, Matrix::Identity(4, 4));
  EXPECT_LE(pd.P.norm(), 1e-12);
  EXPECT_LE(pd.a_n, 1e-12);
}

TEST(ProjectedDynamics, HandExample) {
  const auto pd = projected_dynamics(testing::hand_example_A(), testing::hand_example_B());
  EXPECT_LE((pd.P - Eigen::Vector2d(0.0, 1.0).asDiagonal().toDenseMatrix()).norm(), 1e-15);
  EXPECT_LE((pd.PA - Eigen::Vector2d(0.0, 0.5).asDiagonal().toDenseMatrix()).norm(), 1e-15);
  EXPECT_NEAR(pd.a_n, 0.5, 1e-15);
}

TEST(ProjectedDynamics, ConverterMatchesQrOracle) {
  const Plant plant = models::converter();
  const auto pd = projected_dynamics(plant.A(), plant.B());
  const Matrix P = testing::qr_complement_projector(plant.B());
  const double oracle = testing::eig_spectral_norm(P * plant.A());
  EXPECT_NEAR(pd.a_n, oracle, 1e-12);
  EXPECT_LT(pd.a_n, 1.0);
}

TEST(ProjectedDynamics, ProjectorInvariantsOnRandomInputs) {
  Rand rnd(42);
  for (int trial = 0; trial < 200; ++trial) {
    const int n = rnd.integer(1, 8);
    const int m = rnd.integer(1, n);
    const Matrix A = rnd.matrix(n, n);
    const Matrix B = rnd.matrix(n, m);
    const auto pd = projected_dynamics(A, B);
    EXPECT_LE(spectral_norm(pd.P * pd.P - pd.P), 1e-9);
    EXPECT_LE(spectral_norm(pd.P * B), 1e-9);
    EXPECT_LE((pd.P - testing::qr_complement_projector(B)).norm(), 1e-9);
    EXPECT_NEAR(pd.a_n, testing::eig_spectral_norm(pd.P * A), 1e-9);
  }
}

TEST(ProjectedDynamics, RankDeficientInputThrows) {
  Matrix B(3, 2);
  B << 1, 1, 2, 2, 3, 3;
  EXPECT_THROW((void)projected_dynamics(Matrix::Identity(3, 3), B), RankDeficient);
}

TEST(PseudoInverseTimes, MatchesNormalEquations) {
  Rand rnd(43);
  const Matrix B = rnd.matrix(6, 3);
  const Matrix A = rnd.matrix(6, 6);
  const Matrix oracle = B.completeOrthogonalDecomposition().pseudoInverse() * A;
  EXPECT_LE((linops::pseudo_inverse_times(B, A) - oracle).norm(), 1e-10);
}

}  // namespace
}  // namespace sparsectl
