#include "sparsectl/rng.hpp"

#include <cmath>
#include <numbers>

namespace sparsectl::rng {
namespace {

constexpr std::uint32_t kMul0 = 0xD2511F53;
constexpr std::uint32_t kMul1 = 0xCD9E8D57;
constexpr std::uint32_t kWeyl0 = 0x9E3779B9;
constexpr std::uint32_t kWeyl1 = 0xBB67AE85;

inline void mulhilo(std::uint32_t a, std::uint32_t b, std::uint32_t& hi, std::uint32_t& lo) {
  const std::uint64_t product = static_cast<std::uint64_t>(a) * b;
  hi = static_cast<std::uint32_t>(product >> 32);
  lo = static_cast<std::uint32_t>(product);
}

}  // namespace

Philox4x32::Counter Philox4x32::generate(Counter ctr, Key key) noexcept {
  for (int round = 0; round < kRounds; ++round) {
    std::uint32_t hi0, lo0, hi1, lo1;
    mulhilo(kMul0, ctr[0], hi0, lo0);
    mulhilo(kMul1, ctr[2], hi1, lo1);
    ctr = {hi1 ^ ctr[1] ^ key[0], lo1, hi0 ^ ctr[3] ^ key[1], lo0};
    key[0] += kWeyl0;
    key[1] += kWeyl1;
  }
  return ctr;
}

std::uint64_t splitmix64(std::uint64_t x) noexcept {
  x += 0x9E3779B97F4A7C15ULL;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
  return x ^ (x >> 31);
}

std::pair<std::uint64_t, std::uint64_t> CounterStream::block(std::uint64_t step,
                                                             std::uint32_t pair) const noexcept {
  const Philox4x32::Counter ctr = {pair, static_cast<std::uint32_t>(step),
                                   static_cast<std::uint32_t>(stream_),
                                   static_cast<std::uint32_t>(stream_ >> 32)};
  const Philox4x32::Key key = {static_cast<std::uint32_t>(seed_),
                               static_cast<std::uint32_t>(seed_ >> 32)};
  const auto out = Philox4x32::generate(ctr, key);
  return {(static_cast<std::uint64_t>(out[1]) << 32) | out[0],
          (static_cast<std::uint64_t>(out[3]) << 32) | out[2]};
}

std::uint64_t CounterStream::word(std::uint64_t step, std::uint64_t slot) const noexcept {
  const auto [first, second] = block(step, static_cast<std::uint32_t>(slot >> 1));
  return (slot & 1U) ? second : first;
}

std::pair<double, double> standard_normal_pair(std::uint64_t a, std::uint64_t b) noexcept {
  const double radius = std::sqrt(-2.0 * std::log(to_unit_open_low(a)));
  const double angle = 2.0 * std::numbers::pi * to_unit(b);
  return {radius * std::cos(angle), radius * std::sin(angle)};
}

std::uint64_t derive_seed(std::uint64_t master, std::uint64_t domain, std::uint64_t index) noexcept {
  return splitmix64(splitmix64(master ^ domain) + splitmix64(index));
}

}  // namespace sparsectl::rng
