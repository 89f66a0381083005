#pragma once

#include <cstdint>
#include <cmath>
#include <vector>

namespace reveal {

// Deterministic random source. Wraps a 64-bit Mersenne Twister but draws
// every distribution from raw engine output, so sequences are identical
// across standard libraries and platforms.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : s_(splitmix(seed)), t_(splitmix(s_ + 0x9e3779b97f4a7c15ULL)) {
    state_[0] = s_ ? s_ : 0x8764000b7f4a7c15ULL;
    state_[1] = t_ ? t_ : 0xf542d2d3e9d6b5c4ULL;
  }

  std::uint64_t next_u64() {
    // xoshiro128+ style step on two 64-bit words (xorshift128+)
    std::uint64_t x = state_[0];
    const std::uint64_t y = state_[1];
    state_[0] = y;
    x ^= x << 23;
    state_[1] = x ^ y ^ (x >> 17) ^ (y >> 26);
    return state_[1] + y;
  }

  // Uniform in [0, 1)
  double uniform() {
    return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
  }

  // Uniform in (0, 1); never returns an endpoint
  double uniform_open() {
    double u;
    do {
      u = uniform();
    } while (u == 0.0);
    return u;
  }

  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

  // Uniform integer in [0, n)
  std::uint64_t below(std::uint64_t n) {
    // rejection sampling to stay unbiased
    const std::uint64_t limit = UINT64_MAX - UINT64_MAX % n;
    std::uint64_t v;
    do {
      v = next_u64();
    } while (v >= limit);
    return v % n;
  }

  std::size_t index(std::size_t n) { return static_cast<std::size_t>(below(n)); }

  double normal() {
    // Box-Muller; one value per call keeps call sites order-independent
    const double u1 = uniform_open();
    const double u2 = uniform();
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * M_PI * u2);
  }

  double normal(double mean, double stddev) { return mean + stddev * normal(); }

  template <typename T>
  void shuffle(std::vector<T>& v) {
    for (std::size_t i = v.size(); i > 1; --i) {
      std::size_t j = index(i);
      std::swap(v[i - 1], v[j]);
    }
  }

  // Stable derivation of sub-stream seeds, e.g. per run index.
  static std::uint64_t derive(std::uint64_t master, std::uint64_t stream) {
    return splitmix(splitmix(master) ^ (stream * 0xbf58476d1ce4e5b9ULL + 0x94d049bb133111ebULL));
  }

  static std::uint64_t splitmix(std::uint64_t z) {
    z += 0x9e3779b97f4a7c15ULL;
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
  }

 private:
  std::uint64_t s_, t_;
  std::uint64_t state_[2];
};

}  // namespace reveal
