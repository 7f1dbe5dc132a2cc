#include "sparsectl/linops.hpp"

#include <cmath>
#include <string>

#include "sparsectl/errors.hpp"

namespace sparsectl::linops {
namespace {

void require_nonempty(const Matrix& M, std::string_view what) {
  if (M.rows() == 0 || M.cols() == 0) {
    throw InvalidInput(std::string(what) + ": matrix has a zero dimension");
  }
}

Vector singular_values(const Matrix& M) {
  return Eigen::BDCSVD<Matrix>(M).singularValues();
}

// Cholesky of B^T B after checking its condition number from the singular
// values of B (cond(B^T B) = (s_max / s_min)^2).
Eigen::LLT<Matrix> gram_factor(const Matrix& B) {
  require_nonempty(B, "B");
  if (B.cols() > B.rows()) {
    throw RankDeficient("B has more columns than rows; B^T B is singular");
  }
  const Vector sv = singular_values(B);
  const double s_max = sv(0);
  const double s_min = sv(sv.size() - 1);
  if (!(s_min > 0.0) || (s_max / s_min) * (s_max / s_min) > kMaxGramCondition) {
    throw RankDeficient("B^T B is numerically singular (condition number above 1e12)");
  }
  Eigen::LLT<Matrix> llt(B.transpose() * B);
  if (llt.info() != Eigen::Success) {
    throw RankDeficient("Cholesky factorization of B^T B failed");
  }
  return llt;
}

}  // namespace

void require_finite(const Matrix& M, std::string_view what) {
  require_nonempty(M, what);
  for (Eigen::Index i = 0; i < M.rows(); ++i) {
    for (Eigen::Index j = 0; j < M.cols(); ++j) {
      if (!std::isfinite(M(i, j))) {
        throw InvalidInput(std::string(what) + ": non-finite entry at (" + std::to_string(i) +
                           ", " + std::to_string(j) + ")");
      }
    }
  }
}

double spectral_norm(const Matrix& M) {
  require_finite(M, "spectral_norm");
  if (M.rows() > kDenseSvdLimit || M.cols() > kDenseSvdLimit) {
    return spectral_norm_power(M);
  }
  return singular_values(M)(0);
}

double spectral_norm_power(const Matrix& M) {
  require_finite(M, "spectral_norm_power");
  // Iterate on the smaller Gram matrix without forming it.
  const bool tall = M.rows() >= M.cols();
  const Eigen::Index dim = tall ? M.cols() : M.rows();
  Vector v = Vector::Ones(dim) / std::sqrt(static_cast<double>(dim));
  Vector w(dim);
  double lambda = 0.0;
  for (int iter = 0; iter < kPowerIterationMaxIter; ++iter) {
    if (tall) {
      w.noalias() = M.transpose() * (M * v);
    } else {
      w.noalias() = M * (M.transpose() * v);
    }
    const double next = v.dot(w);
    const double norm = w.norm();
    if (norm == 0.0) {
      return 0.0;
    }
    v = w / norm;
    if (std::abs(next - lambda) <= kPowerIterationTol * std::abs(next)) {
      lambda = next;
      break;
    }
    lambda = next;
  }
  return std::sqrt(std::max(lambda, 0.0));
}

Eigen::Index rank_of(const Matrix& M, double tol) {
  require_nonempty(M, "rank_of");
  if (!(tol > 0.0)) {
    throw InvalidInput("rank_of: tolerance must be positive");
  }
  const Vector sv = singular_values(M);
  if (sv(0) == 0.0) {
    return 0;
  }
  const double cutoff = tol * sv(0);
  return static_cast<Eigen::Index>((sv.array() > cutoff).count());
}

bool is_positive_definite(const Matrix& M) {
  require_nonempty(M, "is_positive_definite");
  if (M.rows() != M.cols()) {
    throw InvalidInput("is_positive_definite: matrix is not square");
  }
  const Matrix sym = 0.5 * (M + M.transpose());
  Eigen::LLT<Matrix> llt(sym);
  return llt.info() == Eigen::Success;
}

Matrix pseudo_inverse_times(const Matrix& B, const Matrix& A) {
  if (A.rows() != B.rows()) {
    throw InvalidInput("pseudo_inverse_times: A and B row counts differ");
  }
  return gram_factor(B).solve(B.transpose() * A);
}

ProjectedDynamics projected_dynamics(const Matrix& A, const Matrix& B) {
  require_nonempty(A, "A");
  if (A.rows() != A.cols()) {
    throw InvalidInput("projected_dynamics: A is not square");
  }
  if (B.rows() != A.rows()) {
    throw InvalidInput("projected_dynamics: B must have as many rows as A");
  }
  const auto llt = gram_factor(B);
  const Eigen::Index n = A.rows();

  ProjectedDynamics out;
  out.P = Matrix::Identity(n, n) - B * llt.solve(B.transpose());
  out.P = 0.5 * (out.P + out.P.transpose());
  // P A = A - B (B^T B)^{-1} B^T A keeps the cost at O(n^2 m).
  out.PA = A - B * llt.solve(B.transpose() * A);
  out.a_n = spectral_norm(out.PA);
  return out;
}

}  // namespace sparsectl::linops
