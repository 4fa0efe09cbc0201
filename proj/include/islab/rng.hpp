#pragma once

#include <array>
#include <cmath>
#include <cstdint>

namespace islab {

// Philox4x32-10 (Salmon et al.); counter-based, so any (key, counter) pair
// can be evaluated independently.
inline std::array<std::uint32_t, 4> philox4x32(std::array<std::uint32_t, 4> ctr,
                                               std::array<std::uint32_t, 2> key) {
  constexpr std::uint32_t kM0 = 0xD2511F53u;
  constexpr std::uint32_t kM1 = 0xCD9E8D57u;
  constexpr std::uint32_t kW0 = 0x9E3779B9u;
  constexpr std::uint32_t kW1 = 0xBB67AE85u;
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

// splitmix64 finalizer
inline std::uint64_t mix64(std::uint64_t z) {
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
  return z ^ (z >> 31);
}

inline std::uint64_t hash_combine(std::uint64_t h, std::uint64_t v) {
  return mix64(h ^ mix64(v + 0x9E3779B97F4A7C15ull));
}

// Open interval (0,1) from 64 random bits.
inline double unit_open(std::uint64_t bits) {
  return (static_cast<double>(bits >> 11) + 0.5) * 0x1.0p-53;
}

// Independent uniform draws indexed by (seed, stream, block). Each block
// holds two doubles.
class CounterStream {
 public:
  CounterStream(std::uint64_t seed, std::uint64_t stream, std::uint32_t block)
      : key_{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32)},
        stream_(stream),
        block_(block) {}

  double next() {
    if (index_ % 2 == 0) {
      buf_ = philox4x32({static_cast<std::uint32_t>(stream_), static_cast<std::uint32_t>(stream_ >> 32), block_,
                         static_cast<std::uint32_t>(index_ / 2)},
                        key_);
    }
    const int i = (index_ % 2) * 2;
    ++index_;
    return unit_open((std::uint64_t{buf_[i]} << 32) | buf_[i + 1]);
  }

 private:
  std::array<std::uint32_t, 2> key_;
  std::uint64_t stream_;
  std::uint32_t block_;
  std::uint32_t index_ = 0;
  std::array<std::uint32_t, 4> buf_{};
};

// Domain tags so unrelated consumers never share a (seed, entity, kind) key.
enum class KeyDomain : std::uint64_t {
  Site = 0x51,
  Edge = 0xED,
  Percolation = 0x9E,
  Thinning = 0x7A,
  Derived = 0xD5,
};

inline std::uint64_t domain_key(KeyDomain domain, std::uint64_t a, std::uint64_t b = 0) {
  return hash_combine(hash_combine(mix64(static_cast<std::uint64_t>(domain)), a), b);
}

// Knuth inversion with a supplied uniform; monotone in mean for fixed u,
// which makes lower-rate streams sub-streams of higher-rate ones.
inline std::uint32_t poisson_inverse(double mean, double u, double exp_neg_mean) {
  if (mean <= 0.0) return 0;
  std::uint32_t k = 0;
  double term = exp_neg_mean;
  double cdf = term;
  while (u > cdf && k < 10000) {
    ++k;
    term *= mean / k;
    cdf += term;
    if (term == 0.0) break;
  }
  return k;
}

}  // namespace islab
