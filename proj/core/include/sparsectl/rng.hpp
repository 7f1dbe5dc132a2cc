#pragma once

#include <array>
#include <cstdint>
#include <string_view>
#include <utility>

namespace sparsectl::rng {

// Philox4x32 with 10 rounds (Salmon et al., SC'11). Stateless: every output
// block is a pure function of (counter, key), so any draw can be addressed
// directly without replaying a sequence.
struct Philox4x32 {
  using Counter = std::array<std::uint32_t, 4>;
  using Key = std::array<std::uint32_t, 2>;

  static constexpr int kRounds = 10;

  [[nodiscard]] static Counter generate(Counter ctr, Key key) noexcept;
};

inline constexpr std::string_view kGeneratorName = "philox4x32-10";

[[nodiscard]] std::uint64_t splitmix64(std::uint64_t x) noexcept;

// Keyed stream of 64-bit words addressed by (stream, step, slot).
// One Philox block yields two 64-bit words, so slot 2j and 2j+1 share a
// block. step is truncated to 32 bits.
class CounterStream {
 public:
  constexpr CounterStream() = default;
  constexpr CounterStream(std::uint64_t seed, std::uint64_t stream) noexcept
      : seed_(seed), stream_(stream) {}

  [[nodiscard]] std::pair<std::uint64_t, std::uint64_t> block(std::uint64_t step,
                                                              std::uint32_t pair) const noexcept;
  [[nodiscard]] std::uint64_t word(std::uint64_t step, std::uint64_t slot) const noexcept;

  [[nodiscard]] std::uint64_t seed() const noexcept { return seed_; }
  [[nodiscard]] std::uint64_t stream() const noexcept { return stream_; }

 private:
  std::uint64_t seed_ = 0;
  std::uint64_t stream_ = 0;
};

// Uniform in [0, 1) with 53 random bits.
[[nodiscard]] inline double to_unit(std::uint64_t bits) noexcept {
  return static_cast<double>(bits >> 11) * 0x1.0p-53;
}

// Uniform in (0, 1]; safe as a logarithm argument.
[[nodiscard]] inline double to_unit_open_low(std::uint64_t bits) noexcept {
  return (static_cast<double>(bits >> 11) + 1.0) * 0x1.0p-53;
}

// Box-Muller pair of independent standard normals from two words.
[[nodiscard]] std::pair<double, double> standard_normal_pair(std::uint64_t a,
                                                             std::uint64_t b) noexcept;

// Derive a sub-seed for an independent purpose (initial states, masks,
// model parameters) from a master seed and a domain tag.
[[nodiscard]] std::uint64_t derive_seed(std::uint64_t master, std::uint64_t domain,
                                        std::uint64_t index = 0) noexcept;

namespace domain {
inline constexpr std::uint64_t kInitialState = 0x696e69745f737461ULL;
inline constexpr std::uint64_t kMask = 0x6d61736b5f737472ULL;
inline constexpr std::uint64_t kModelParams = 0x6d6f64656c5f7072ULL;
}  // namespace domain

}  // namespace sparsectl::rng
