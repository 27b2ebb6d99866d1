#pragma once

#include <cmath>
#include <cstdint>
#include <cstddef>

namespace switchsplit {

// SplitMix64 output mix. Bijective on 64-bit words, good avalanche; used to
// scramble seeds and to derive independent stream keys from index tuples.
constexpr std::uint64_t mix64(std::uint64_t z) {
  z += 0x9e3779b97f4a7c15ull;
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
  return z ^ (z >> 31);
}

// Key for the stream identified by (key, a, b, c, d). Each coordinate is
// mixed separately before folding so that permuting the tuple changes the
// result; collisions across distinct tuples are as likely as random 64-bit
// collisions.
constexpr std::uint64_t derive_seed(std::uint64_t key, std::uint64_t a,
                                    std::uint64_t b = 0, std::uint64_t c = 0,
                                    std::uint64_t d = 0) {
  std::uint64_t s = mix64(key);
  s = mix64(s ^ mix64(a ^ 0xa076'1d64'78bd'642full));
  s = mix64(s ^ mix64(b ^ 0xe703'7ed1'a0b4'28dbull));
  s = mix64(s ^ mix64(c ^ 0x8ebc'6af0'9c88'c6e3ull));
  s = mix64(s ^ mix64(d ^ 0x5899'65cc'7537'4cc3ull));
  return s;
}

// xoshiro256++ (Blackman/Vigna, public domain reference implementation).
// Chosen over std::mt19937_64 for speed and cheap construction: the engine
// creates one generator per (replicate, level, particle) cell, so state
// must be small and seeding fast.
class Xoshiro256pp {
 public:
  using result_type = std::uint64_t;

  explicit Xoshiro256pp(std::uint64_t seed) {
    // SplitMix64 sequence fills the state; never all-zero.
    std::uint64_t z = seed;
    for (auto& w : s_) {
      w = mix64(z);
      z += 0x9e3779b97f4a7c15ull;
    }
  }

  static constexpr result_type min() { return 0; }
  static constexpr result_type max() { return ~result_type{0}; }

  result_type operator()() {
    const std::uint64_t result = rotl(s_[0] + s_[3], 23) + s_[0];
    const std::uint64_t t = s_[1] << 17;
    s_[2] ^= s_[0];
    s_[3] ^= s_[1];
    s_[1] ^= s_[2];
    s_[0] ^= s_[3];
    s_[2] ^= t;
    s_[3] = rotl(s_[3], 45);
    return result;
  }

 private:
  static constexpr std::uint64_t rotl(std::uint64_t x, int k) {
    return (x << k) | (x >> (64 - k));
  }

  std::uint64_t s_[4];
};

// One logical random stream. All distributions are implemented here (not
// via <random> distributions) so that the variate sequence for a given seed
// is fixed across standard libraries and platforms.
class RngStream {
 public:
  explicit RngStream(std::uint64_t seed) : gen_(seed) {}

  std::uint64_t next_u64() { return gen_(); }

  // Uniform on [0, 1) with 53 random bits.
  double uniform() { return static_cast<double>(gen_() >> 11) * 0x1.0p-53; }

  // Uniform on {0, ..., n-1} by fixed-point multiply. The bias relative to
  // exact rejection sampling is below n / 2^64 and costs no retries, which
  // keeps the draw count per selection deterministic.
  std::size_t uniform_index(std::size_t n) {
    return static_cast<std::size_t>(
        (static_cast<unsigned __int128>(gen_()) * n) >> 64);
  }

  // Standard normal via Marsaglia's polar method; the spare is cached.
  double normal() {
    if (have_spare_) {
      have_spare_ = false;
      return spare_;
    }
    double u, v, s;
    do {
      u = 2.0 * uniform() - 1.0;
      v = 2.0 * uniform() - 1.0;
      s = u * u + v * v;
    } while (s >= 1.0 || s == 0.0);
    const double f = std::sqrt(-2.0 * std::log(s) / s);
    spare_ = v * f;
    have_spare_ = true;
    return u * f;
  }

 private:
  Xoshiro256pp gen_;
  double spare_ = 0.0;
  bool have_spare_ = false;
};

// Stream purposes within one (replicate, level, particle) cell.
inline constexpr std::uint64_t kTagPropagate = 0;  // path noise + mode draws
inline constexpr std::uint64_t kTagSelect = 1;     // ancestor / replacement picks

}  // namespace switchsplit
