// Reproducible splittable random streams for parallel Monte Carlo.
//
// Each stream is identified by a 64-bit key.  The generator state is expanded
// from the key with splitmix64 and advanced with xoshiro256++.  Substreams are
// derived by hashing (key, index), so streams for distinct indices never share
// state regardless of how many draws were taken from the parent.
#pragma once

#include <cmath>
#include <cstdint>

namespace brwld {

namespace detail {

inline std::uint64_t splitmix64_mix(std::uint64_t z) {
  z += 0x9e3779b97f4a7c15ULL;
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

inline std::uint64_t rotl(std::uint64_t x, int k) {
  return (x << k) | (x >> (64 - k));
}

}  // namespace detail

class Stream {
 public:
  explicit Stream(std::uint64_t key) : key_(key) {
    // splitmix64 expansion of the key into the xoshiro256++ state
    std::uint64_t z = key;
    for (auto& s : s_) {
      z += 0x9e3779b97f4a7c15ULL;
      s = detail::splitmix64_mix(z);
    }
  }

  std::uint64_t key() const { return key_; }

  // Derives an independent child stream from the *initial* key, not the
  // current state: child(i) is the same no matter how many draws were taken.
  Stream child(std::uint64_t index) const {
    return Stream(detail::splitmix64_mix(key_ ^ detail::splitmix64_mix(index + 0x6a09e667f3bcc909ULL)));
  }

  std::uint64_t next_u64() {
    const std::uint64_t result = detail::rotl(s_[0] + s_[3], 23) + s_[0];
    const std::uint64_t t = s_[1] << 17;
    s_[2] ^= s_[0];
    s_[3] ^= s_[1];
    s_[1] ^= s_[2];
    s_[0] ^= s_[3];
    s_[2] ^= t;
    s_[3] = detail::rotl(s_[3], 45);
    return result;
  }

  // uniform in [0, 1)
  double uniform() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

  // uniform in (0, 1); safe as a log/division argument
  double uniform_pos() {
    double u;
    do {
      u = uniform();
    } while (u == 0.0);
    return u;
  }

  double normal() {
    if (have_spare_) {
      have_spare_ = false;
      return spare_;
    }
    // Box-Muller
    const double u1 = uniform_pos();
    const double u2 = uniform();
    const double r = std::sqrt(-2.0 * std::log(u1));
    const double a = 6.283185307179586476925286766559 * u2;
    spare_ = r * std::sin(a);
    have_spare_ = true;
    return r * std::cos(a);
  }

  double normal(double mean, double sd) { return mean + sd * normal(); }

  std::uint64_t poisson(double mu) {
    std::uint64_t total = 0;
    // Knuth's method, chunked so the e^{-mu} factor never underflows
    while (mu > 30.0) {
      total += poisson_knuth(30.0);
      mu -= 30.0;
    }
    return total + poisson_knuth(mu);
  }

  // uniform integer in [0, n)
  std::uint64_t below(std::uint64_t n) {
    // Lemire's multiply-shift rejection
    std::uint64_t x = next_u64();
    __uint128_t m = static_cast<__uint128_t>(x) * n;
    auto lo = static_cast<std::uint64_t>(m);
    if (lo < n) {
      const std::uint64_t threshold = (0 - n) % n;
      while (lo < threshold) {
        x = next_u64();
        m = static_cast<__uint128_t>(x) * n;
        lo = static_cast<std::uint64_t>(m);
      }
    }
    return static_cast<std::uint64_t>(m >> 64);
  }

 private:
  std::uint64_t poisson_knuth(double mu) {
    if (mu <= 0.0) return 0;
    const double limit = std::exp(-mu);
    std::uint64_t k = 0;
    double p = 1.0;
    do {
      ++k;
      p *= uniform_pos();
    } while (p > limit);
    return k - 1;
  }

  std::uint64_t key_;
  std::uint64_t s_[4];
  bool have_spare_ = false;
  double spare_ = 0.0;
};

// Stream for replica `index` under a master seed.  Statistically independent
// across indices and reproducible: the pair (seed, index) fully determines
// the draw sequence.
inline Stream derive_stream(std::uint64_t master_seed, std::uint64_t index) {
  return Stream(detail::splitmix64_mix(master_seed) ^ detail::splitmix64_mix(index * 0xd1342543de82ef95ULL + 0x2545f4914f6cdd1dULL)).child(index);
}

}  // namespace brwld
