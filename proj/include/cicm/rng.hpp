#pragma once

#include <array>
#include <cmath>
#include <cstdint>

namespace cicm {

// Counter-based Philox4x32-10 generator.  Chosen over the stdlib engines so
// that every draw is reproducible across platforms and compilers: the output
// is a pure function of (seed, counter) with no implementation-defined state.
//
// Draw accounting, used to document the simulation stream layouts:
//   * next_u32()   consumes one 32-bit word,
//   * uniform()    consumes two words (53-bit mantissa),
//   * normal()     consumes two uniforms (Box-Muller, cosine branch only; the
//                  sine half is discarded so draw positions stay predictable),
//   * bernoulli()  consumes one uniform.
class Philox {
 public:
  explicit Philox(std::uint64_t seed)
      : key_{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32)} {}

  std::uint32_t next_u32() {
    if (buf_pos_ == 4) {
      block_ = round10(ctr_, key_);
      increment(ctr_);
      buf_pos_ = 0;
    }
    return block_[buf_pos_++];
  }

  // Uniform double in [0, 1) with 53 random bits.
  double uniform() {
    const std::uint64_t lo = next_u32();
    const std::uint64_t hi = next_u32();
    const std::uint64_t bits = (hi << 32) | lo;
    return static_cast<double>(bits >> 11) * 0x1.0p-53;
  }

  double uniform(double a, double b) { return a + (b - a) * uniform(); }

  // Standard normal: z = sqrt(-2 log(1-u1)) * cos(2 pi u2).
  double normal() {
    const double u1 = 1.0 - uniform();  // (0, 1], keeps log() finite
    const double u2 = uniform();
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * M_PI * u2);
  }

  double normal(double mean, double sd) { return mean + sd * normal(); }

  bool bernoulli(double p) { return uniform() < p; }

 private:
  static std::uint32_t mulhi(std::uint32_t a, std::uint32_t b) {
    return static_cast<std::uint32_t>((static_cast<std::uint64_t>(a) * b) >> 32);
  }

  static void increment(std::array<std::uint32_t, 4>& c) {
    if (++c[0] != 0) return;
    if (++c[1] != 0) return;
    if (++c[2] != 0) return;
    ++c[3];
  }

  static std::array<std::uint32_t, 4> round10(std::array<std::uint32_t, 4> c,
                                              std::array<std::uint32_t, 2> k) {
    constexpr std::uint32_t M0 = 0xD2511F53u, M1 = 0xCD9E8D57u;
    constexpr std::uint32_t W0 = 0x9E3779B9u, W1 = 0xBB67AE85u;
    for (int round = 0; round < 10; ++round) {
      const std::uint32_t lo0 = M0 * c[0], hi0 = mulhi(M0, c[0]);
      const std::uint32_t lo1 = M1 * c[2], hi1 = mulhi(M1, c[2]);
      c = {hi1 ^ c[1] ^ k[0], lo1, hi0 ^ c[3] ^ k[1], lo0};
      k[0] += W0;
      k[1] += W1;
    }
    return c;
  }

  std::array<std::uint32_t, 2> key_;
  std::array<std::uint32_t, 4> ctr_{0, 0, 0, 0};
  std::array<std::uint32_t, 4> block_{};
  int buf_pos_ = 4;
};

// SplitMix64 scramble, used to derive independent child seeds from a base
// seed plus a stream index without correlated low bits.
inline std::uint64_t mix_seed(std::uint64_t base, std::uint64_t stream) {
  std::uint64_t z = base + 0x9E3779B97F4A7C15ull * (stream + 1);
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
  return z ^ (z >> 31);
}

}  // namespace cicm
