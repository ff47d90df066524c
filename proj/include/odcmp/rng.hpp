#pragma once

#include <cmath>
#include <cstdint>

namespace odcmp::rng {

// splitmix64, used for seeding and for deriving sub-stream seeds.
inline uint64_t splitmix64(uint64_t& state) {
  uint64_t z = (state += 0x9e3779b97f4a7c15ULL);
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

// Documented derivation of sub-stream seeds from a base seed. All randomness
// in a run flows from one config seed through chains of this function.
inline uint64_t derive_seed(uint64_t base, uint64_t tag) {
  uint64_t s = base ^ (tag * 0x9e3779b97f4a7c15ULL);
  return splitmix64(s);
}

// xoshiro256++ with hand-rolled distributions. std::* distributions are
// implementation-defined, so they cannot back a bit-reproducibility contract.
class Stream {
 public:
  explicit Stream(uint64_t seed) {
    uint64_t sm = seed;
    for (auto& w : s_) w = splitmix64(sm);
  }

  uint64_t next_u64() {
    const uint64_t result = rotl(s_[0] + s_[3], 23) + s_[0];
    const uint64_t t = s_[1] << 17;
    s_[2] ^= s_[0];
    s_[3] ^= s_[1];
    s_[1] ^= s_[2];
    s_[0] ^= s_[3];
    s_[2] ^= t;
    s_[3] = rotl(s_[3], 45);
    return result;
  }

  // Uniform in [0, 1).
  double next_double() { return (next_u64() >> 11) * 0x1.0p-53; }

  // Uniform in [0, n). Lemire's unbiased rejection method.
  uint64_t next_below(uint64_t n) {
    __uint128_t m = (__uint128_t)next_u64() * n;
    uint64_t lo = (uint64_t)m;
    if (lo < n) {
      uint64_t threshold = (0 - n) % n;
      while (lo < threshold) {
        m = (__uint128_t)next_u64() * n;
        lo = (uint64_t)m;
      }
    }
    return (uint64_t)(m >> 64);
  }

  int64_t next_in(int64_t lo, int64_t hi) {  // inclusive range
    return lo + (int64_t)next_below((uint64_t)(hi - lo + 1));
  }

  bool bernoulli(double p) { return next_double() < p; }

  // Marsaglia polar method; one value cached.
  double normal() {
    if (has_spare_) {
      has_spare_ = false;
      return spare_;
    }
    double u, v, s;
    do {
      u = 2.0 * next_double() - 1.0;
      v = 2.0 * next_double() - 1.0;
      s = u * u + v * v;
    } while (s >= 1.0 || s == 0.0);
    double f = std::sqrt(-2.0 * std::log(s) / s);
    spare_ = v * f;
    has_spare_ = true;
    return u * f;
  }

  // Poisson draw: Knuth product method for small lambda, Hormann's PTRS
  // transformed rejection for large lambda.
  uint64_t poisson(double lambda) {
    if (lambda <= 0.0) return 0;
    if (lambda < 10.0) {
      const double limit = std::exp(-lambda);
      uint64_t k = 0;
      double prod = next_double();
      while (prod > limit) {
        ++k;
        prod *= next_double();
      }
      return k;
    }
    return poisson_ptrs(lambda);
  }

  // Binomial(n, p) by per-trial Bernoulli draws. O(n), exact distribution;
  // callers here never exceed a few million total trials per run.
  uint64_t binomial(uint64_t n, double p) {
    if (p <= 0.0) return 0;
    if (p >= 1.0) return n;
    uint64_t k = 0;
    for (uint64_t i = 0; i < n; ++i) k += bernoulli(p) ? 1 : 0;
    return k;
  }

 private:
  static uint64_t rotl(uint64_t x, int k) { return (x << k) | (x >> (64 - k)); }

  uint64_t poisson_ptrs(double lambda) {
    const double b = 0.931 + 2.53 * std::sqrt(lambda);
    const double a = -0.059 + 0.02483 * b;
    const double inv_alpha = 1.1239 + 1.1328 / (b - 3.4);
    const double v_r = 0.9277 - 3.6224 / (b - 2.0);
    const double log_lambda = std::log(lambda);
    for (;;) {
      double u = next_double() - 0.5;
      double v = next_double();
      double us = 0.5 - std::fabs(u);
      double kf = std::floor((2.0 * a / us + b) * u + lambda + 0.43);
      if (kf < 0.0) continue;
      if (us >= 0.07 && v <= v_r) return (uint64_t)kf;
      if (us < 0.013 && v > us) continue;
      double k = kf;
      if (std::log(v) + std::log(inv_alpha) - std::log(a / (us * us) + b) <=
          k * log_lambda - lambda - std::lgamma(k + 1.0)) {
        return (uint64_t)kf;
      }
    }
  }

  uint64_t s_[4];
  bool has_spare_ = false;
  double spare_ = 0.0;
};

}  // namespace odcmp::rng
