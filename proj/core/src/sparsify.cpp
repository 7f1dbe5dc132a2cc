#include "sparsectl/sparsify.hpp"

#include <algorithm>
#include <numeric>
#include <string>
#include <utility>

#include "sparsectl/errors.hpp"

namespace sparsectl {

std::size_t Mask::active_count() const noexcept {
  return static_cast<std::size_t>(std::count(active.begin(), active.end(), std::uint8_t{1}));
}

MaskSampler::MaskSampler(Vector probs, std::uint64_t seed, std::uint64_t stream_id)
    : probs_(std::move(probs)), stream_(seed, stream_id) {
  if (probs_.size() == 0) {
    throw InvalidInput("MaskSampler: empty probability vector");
  }
  for (Eigen::Index i = 0; i < probs_.size(); ++i) {
    if (!(probs_(i) > 0.0) || !(probs_(i) <= 1.0)) {
      throw InvalidInput("MaskSampler: probability at index " + std::to_string(i) +
                         " outside (0, 1]");
    }
  }
  inv_probs_ = probs_.cwiseInverse();
}

Mask MaskSampler::sample(std::uint64_t k) const {
  Mask mask;
  sample_into(k, mask);
  return mask;
}

void MaskSampler::sample_into(std::uint64_t k, Mask& out) const {
  const Eigen::Index n = probs_.size();
  out.active.resize(static_cast<std::size_t>(n));
  out.scale.resize(n);
  for (Eigen::Index i = 0; i < n; i += 2) {
    const bool pair_certain = probs_(i) == 1.0 && (i + 1 >= n || probs_(i + 1) == 1.0);
    std::pair<std::uint64_t, std::uint64_t> words{0, 0};
    if (!pair_certain) {
      words = stream_.block(k, static_cast<std::uint32_t>(i / 2));
    }
    for (Eigen::Index j = i; j < std::min(i + 2, n); ++j) {
      bool on = true;
      if (probs_(j) < 1.0) {
        const std::uint64_t bits = (j == i) ? words.first : words.second;
        on = rng::to_unit(bits) < probs_(j);
      }
      out.active[static_cast<std::size_t>(j)] = on ? 1 : 0;
      out.scale(j) = on ? inv_probs_(j) : 0.0;
    }
  }
}

Matrix second_moment_matrix(const Matrix& L, const Vector& probs) {
  if (L.rows() != L.cols()) {
    throw InvalidInput("second_moment_matrix: L must be square");
  }
  if (probs.size() != L.cols()) {
    throw InvalidInput("second_moment_matrix: probability vector has the wrong length");
  }
  Matrix out = L.transpose() * L;
  const Vector s = L.colwise().squaredNorm().transpose();
  for (Eigen::Index i = 0; i < probs.size(); ++i) {
    if (!(probs(i) > 0.0) || !(probs(i) <= 1.0)) {
      throw InvalidInput("second_moment_matrix: probability outside (0, 1]");
    }
    out(i, i) += s(i) * (1.0 / probs(i) - 1.0);
  }
  return out;
}

double expected_sparsity(const Vector& probs, const Vector& weights) {
  if (probs.size() != weights.size()) {
    throw InvalidInput("expected_sparsity: probs has length " + std::to_string(probs.size()) +
                       " but weights has length " + std::to_string(weights.size()));
  }
  return weights.dot(probs);
}

}  // namespace sparsectl
