#pragma once

// Counter-based Gaussian noise. Every increment is a pure function of
// (seed, stream id, step, block), so results do not depend on how particles
// are distributed over threads or on the order in which they are visited.

#include <array>
#include <cmath>
#include <cstdint>
#include <numbers>
#include <span>
#include <vector>

namespace mckv {

using Philox4x32Counter = std::array<std::uint32_t, 4>;
using Philox4x32Key = std::array<std::uint32_t, 2>;

/// Philox4x32 with 10 rounds (Salmon et al., SC'11).
inline Philox4x32Counter philox4x32_10(Philox4x32Counter ctr, Philox4x32Key key) noexcept {
  constexpr std::uint32_t kMulA = 0xD2511F53u;
  constexpr std::uint32_t kMulB = 0xCD9E8D57u;
  constexpr std::uint32_t kWeylA = 0x9E3779B9u;
  constexpr std::uint32_t kWeylB = 0xBB67AE85u;
  for (int round = 0; round < 10; ++round) {
    const std::uint64_t p0 = std::uint64_t{kMulA} * ctr[0];
    const std::uint64_t p1 = std::uint64_t{kMulB} * ctr[2];
    const auto hi0 = static_cast<std::uint32_t>(p0 >> 32);
    const auto lo0 = static_cast<std::uint32_t>(p0);
    const auto hi1 = static_cast<std::uint32_t>(p1 >> 32);
    const auto lo1 = static_cast<std::uint32_t>(p1);
    ctr = {hi1 ^ ctr[1] ^ key[0], lo1, hi0 ^ ctr[3] ^ key[1], lo0};
    key[0] += kWeylA;
    key[1] += kWeylB;
  }
  return ctr;
}

/// Maps 64 random bits to the open interval (0, 1).
inline double bits_to_open_unit(std::uint64_t bits) noexcept {
  return (static_cast<double>(bits >> 12) + 0.5) * 0x1.0p-52;
}

/// Stream ids at or above this value are reserved for initial-condition sampling.
inline constexpr std::uint32_t kReservedStreamBase = 0x80000000u;

/// Identifies one independent noise stream (one particle) for a given seed.
struct NoiseStream {
  std::uint64_t seed = 0;
  std::uint32_t stream_id = 0;
};

/// Two independent uniforms in (0,1) for (stream, step, block).
inline std::array<double, 2> uniform_pair(const NoiseStream& s, std::int64_t step,
                                          std::uint32_t block) noexcept {
  const auto ustep = static_cast<std::uint64_t>(step);
  const Philox4x32Counter ctr{static_cast<std::uint32_t>(ustep), static_cast<std::uint32_t>(ustep >> 32),
                              s.stream_id, block};
  const Philox4x32Key key{static_cast<std::uint32_t>(s.seed), static_cast<std::uint32_t>(s.seed >> 32)};
  const auto r = philox4x32_10(ctr, key);
  const std::uint64_t a = (std::uint64_t{r[1]} << 32) | r[0];
  const std::uint64_t b = (std::uint64_t{r[3]} << 32) | r[2];
  return {bits_to_open_unit(a), bits_to_open_unit(b)};
}

/// Fills `out` with standard normals for (stream, step) by Box-Muller.
/// Components 2j and 2j+1 come from block j.
inline void fill_normals(const NoiseStream& s, std::int64_t step, std::span<double> out) noexcept {
  const std::size_t m = out.size();
  for (std::size_t j = 0; 2 * j < m; ++j) {
    const auto u = uniform_pair(s, step, static_cast<std::uint32_t>(j));
    const double r = std::sqrt(-2.0 * std::log(u[0]));
    const double angle = 2.0 * std::numbers::pi * u[1];
    out[2 * j] = r * std::cos(angle);
    if (2 * j + 1 < m) {
      out[2 * j + 1] = r * std::sin(angle);
    }
  }
}

/// Standard normal increment (unscaled) for a stream at a step; pure in its inputs.
std::vector<double> sample_increment(const NoiseStream& stream, std::int64_t step, std::size_t noise_dim);

}  // namespace mckv
