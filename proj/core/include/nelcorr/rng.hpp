#pragma once

#include <array>
#include <cmath>
#include <cstdint>
#include <numbers>

namespace nelcorr {

// Philox4x32-10 counter-based generator.  Every (key, counter) pair maps to an
// independent block of four 32-bit words, so streams can be addressed directly
// by (seed, path, step) without sequential state.
class Philox4x32 {
 public:
  using Block = std::array<std::uint32_t, 4>;
  using Key = std::array<std::uint32_t, 2>;

  static Block generate(Block ctr, Key key) {
    for (int round = 0; round < 10; ++round) {
      if (round > 0) {
        key[0] += 0x9E3779B9u;
        key[1] += 0xBB67AE85u;
      }
      const std::uint64_t p0 = std::uint64_t{0xD2511F53u} * ctr[0];
      const std::uint64_t p1 = std::uint64_t{0xCD9E8D57u} * ctr[2];
      const auto hi0 = static_cast<std::uint32_t>(p0 >> 32);
      const auto lo0 = static_cast<std::uint32_t>(p0);
      const auto hi1 = static_cast<std::uint32_t>(p1 >> 32);
      const auto lo1 = static_cast<std::uint32_t>(p1);
      ctr = {hi1 ^ ctr[1] ^ key[0], lo1, hi0 ^ ctr[3] ^ key[1], lo0};
    }
    return ctr;
  }
};

// Purpose tags keep sampling and path noise on disjoint key spaces.
enum class Stream : std::uint32_t { sampling = 0x5A17u, noise = 0x0D15u };

class CounterRng {
 public:
  CounterRng(std::uint64_t seed, Stream stream)
      : key_{static_cast<std::uint32_t>(seed),
             static_cast<std::uint32_t>(seed >> 32) ^ (static_cast<std::uint32_t>(stream) << 16)} {}

  // Block for (index, step, sub-block).
  Philox4x32::Block block(std::uint64_t index, std::uint32_t step, std::uint32_t sub) const {
    return Philox4x32::generate(
        {step, sub, static_cast<std::uint32_t>(index), static_cast<std::uint32_t>(index >> 32)}, key_);
  }

  // Two doubles in [0, 1) with 53 random bits each.
  static std::array<double, 2> uniforms(const Philox4x32::Block& b) {
    return {to_unit(b[0], b[1]), to_unit(b[2], b[3])};
  }

  // Two independent standard normals by Box-Muller.
  static std::array<double, 2> normals(const Philox4x32::Block& b) {
    const auto u = uniforms(b);
    const double r = std::sqrt(-2.0 * std::log(1.0 - u[0]));
    const double phi = 2.0 * std::numbers::pi * u[1];
    return {r * std::cos(phi), r * std::sin(phi)};
  }

 private:
  static double to_unit(std::uint32_t hi, std::uint32_t lo) {
    const std::uint64_t bits = (std::uint64_t{hi >> 5} << 26) | (lo >> 6);
    return static_cast<double>(bits) * 0x1.0p-53;
  }

  Philox4x32::Key key_;
};

}  // namespace nelcorr
