#pragma once

// Philox4x32-10 (Salmon et al., SC'11). Stateless: every output block is a
// pure function of a 128-bit counter and a 64-bit key, so parallel rollouts
// draw the same numbers regardless of scheduling.

#include <array>
#include <cstdint>

namespace minsoftmax {

class Philox4x32 {
 public:
  using Counter = std::array<std::uint32_t, 4>;
  using Key = std::array<std::uint32_t, 2>;

  static constexpr Counter block(Counter ctr, Key key) noexcept {
    for (int round = 0; round < 10; ++round) {
      if (round > 0) {
        key[0] += kW0;
        key[1] += kW1;
      }
      const std::uint64_t p0 = std::uint64_t{kM0} * ctr[0];
      const std::uint64_t p1 = std::uint64_t{kM1} * ctr[2];
      ctr = {static_cast<std::uint32_t>(p1 >> 32) ^ ctr[1] ^ key[0], static_cast<std::uint32_t>(p1),
             static_cast<std::uint32_t>(p0 >> 32) ^ ctr[3] ^ key[1], static_cast<std::uint32_t>(p0)};
    }
    return ctr;
  }

 private:
  static constexpr std::uint32_t kM0 = 0xD2511F53;
  static constexpr std::uint32_t kM1 = 0xCD9E8D57;
  static constexpr std::uint32_t kW0 = 0x9E3779B9;
  static constexpr std::uint32_t kW1 = 0xBB67AE85;
};

/// Uniform double in [0, 1) with 53 random bits, keyed by
/// (seed, rollout, stage, lane).
inline double counter_uniform(std::uint64_t seed, std::uint64_t rollout, std::uint32_t stage,
                              std::uint32_t lane) noexcept {
  const auto out = Philox4x32::block(
      {static_cast<std::uint32_t>(rollout), static_cast<std::uint32_t>(rollout >> 32), stage, lane},
      {static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32)});
  const std::uint64_t bits = (std::uint64_t{out[0]} << 21) ^ (out[1] >> 11);
  return static_cast<double>(bits & ((std::uint64_t{1} << 53) - 1)) * 0x1.0p-53;
}

}  // namespace minsoftmax
