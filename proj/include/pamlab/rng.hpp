#pragma once

// Deterministic randomness: mt19937_64 (bit-exact by the standard) with
// hand-rolled samplers, so a fixed (seed, platform) reproduces every output
// byte. Seeds for parallel work fan out from a master seed through a
// splitmix64 chain keyed by (experiment tag, N, sample index).

#include <cmath>
#include <cstdint>
#include <random>
#include <string_view>

namespace pamlab {

inline std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9E3779B97F4A7C15ull;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ull;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBull;
  return x ^ (x >> 31);
}

inline std::uint64_t fnv1a64(std::string_view s) {
  std::uint64_t h = 0xCBF29CE484222325ull;
  for (unsigned char c : s) {
    h ^= c;
    h *= 0x100000001B3ull;
  }
  return h;
}

inline std::uint64_t seed_fanout(std::uint64_t master, std::string_view tag,
                                 std::uint64_t N, std::uint64_t index) {
  std::uint64_t s = splitmix64(master ^ fnv1a64(tag));
  s = splitmix64(s ^ N);
  return splitmix64(s ^ index);
}

class Rng {
 public:
  explicit Rng(std::uint64_t seed) : eng_(seed) {}

  double uniform01() {  // in [0,1), 53-bit resolution
    return (eng_() >> 11) * 0x1.0p-53;
  }

  double gaussian() {  // polar Box-Muller with cached spare
    if (has_spare_) {
      has_spare_ = false;
      return spare_;
    }
    double u, v, s;
    do {
      u = 2.0 * uniform01() - 1.0;
      v = 2.0 * uniform01() - 1.0;
      s = u * u + v * v;
    } while (s >= 1.0 || s == 0.0);
    const double m = std::sqrt(-2.0 * std::log(s) / s);
    spare_ = v * m;
    has_spare_ = true;
    return u * m;
  }

  double rademacher() { return (eng_() & 1ull) ? 1.0 : -1.0; }

  // Uniform on [-sqrt(3), sqrt(3)]: mean 0, variance 1.
  double std_uniform() {
    constexpr double s3 = 1.7320508075688772935;
    return s3 * (2.0 * uniform01() - 1.0);
  }

  double exponential(double rate) { return -std::log1p(-uniform01()) / rate; }

  // Index in [0, n) with probability weights[i] / sum(weights).
  int categorical(const double* weights, int n, double total) {
    double u = uniform01() * total;
    for (int i = 0; i < n - 1; ++i) {
      u -= weights[i];
      if (u < 0) return i;
    }
    return n - 1;
  }

  std::uint64_t bits() { return eng_(); }

 private:
  std::mt19937_64 eng_;
  bool has_spare_ = false;
  double spare_ = 0;
};

}  // namespace pamlab
