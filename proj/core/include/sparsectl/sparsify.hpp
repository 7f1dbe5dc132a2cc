#pragma once

#include <cstdint>
#include <vector>

#include "sparsectl/linops.hpp"
#include "sparsectl/rng.hpp"

namespace sparsectl {

// Realization of the random diagonal C(k): coordinate i is observed with
// probability probs[i] and then rescaled by 1 / probs[i], so E[C(k)] = I.
struct Mask {
  std::vector<std::uint8_t> active;
  Vector scale;

  [[nodiscard]] std::size_t active_count() const noexcept;
};

class MaskSampler {
 public:
  // Throws InvalidInput unless every probability lies in (0, 1].
  MaskSampler(Vector probs, std::uint64_t seed, std::uint64_t stream_id);

  // Draw for time step k. Pure in (seed, stream_id, k, i).
  [[nodiscard]] Mask sample(std::uint64_t k) const;
  // Allocation-free variant for hot loops; resizes out on first use.
  void sample_into(std::uint64_t k, Mask& out) const;

  [[nodiscard]] const Vector& probs() const noexcept { return probs_; }
  [[nodiscard]] std::uint64_t seed() const noexcept { return stream_.seed(); }
  [[nodiscard]] std::uint64_t stream_id() const noexcept { return stream_.stream(); }

 private:
  Vector probs_;
  Vector inv_probs_;
  rng::CounterStream stream_;
};

// E[C^T L^T L C] = L^T L + Diag(s_i (1 / p_i - 1)), s_i = ||L e_i||^2.
[[nodiscard]] Matrix second_moment_matrix(const Matrix& L, const Vector& probs);

// Sum_i w_i p_i: the expected number (or weighted cost) of active sensors.
[[nodiscard]] double expected_sparsity(const Vector& probs, const Vector& weights);

}  // namespace sparsectl
