#ifndef ANTILEARN_RNG_HPP
#define ANTILEARN_RNG_HPP

#include <cmath>
#include <cstdint>
#include <random>

namespace antilearn {

// All stochastic behaviour in the library flows through this file so that
// results are reproducible bit-for-bit across platforms. std::mt19937_64 is
// fully specified by the standard; the distributions below are hand-rolled
// because the standard library ones are not.

inline uint64_t splitmix64(uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

// Derives an independent stream seed from a base seed and a sequence of tags.
inline uint64_t derive_seed(uint64_t seed) { return splitmix64(seed); }
template <typename... Rest>
inline uint64_t derive_seed(uint64_t seed, uint64_t tag, Rest... rest) {
  return derive_seed(splitmix64(seed ^ splitmix64(tag)), rest...);
}

class Rng {
 public:
  explicit Rng(uint64_t seed) : eng_(seed) {}

  uint64_t next_u64() { return eng_(); }

  // Uniform in [0,1) with 53 random bits.
  double uniform() { return static_cast<double>(eng_() >> 11) * 0x1.0p-53; }

  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

  // Standard normal via Box-Muller; one spare value cached.
  double gauss() {
    if (has_spare_) {
      has_spare_ = false;
      return spare_;
    }
    double u1 = uniform();
    double u2 = uniform();
    while (u1 <= 1e-300) u1 = uniform();
    double r = std::sqrt(-2.0 * std::log(u1));
    double a = 6.283185307179586476925286766559 * u2;
    spare_ = r * std::sin(a);
    has_spare_ = true;
    return r * std::cos(a);
  }

  // Uniform integer in [0, bound) by rejection; bound > 0.
  uint64_t bounded(uint64_t bound) {
    const uint64_t threshold = (~bound + 1) % bound;  // 2^64 mod bound
    for (;;) {
      uint64_t r = eng_();
      if (r >= threshold) return r % bound;
    }
  }

  bool coin() { return (eng_() >> 63) != 0; }

  template <typename T>
  void shuffle(std::vector<T>& xs) {
    for (size_t i = xs.size(); i > 1; --i) {
      size_t j = static_cast<size_t>(bounded(i));
      std::swap(xs[i - 1], xs[j]);
    }
  }

 private:
  std::mt19937_64 eng_;
  double spare_ = 0.0;
  bool has_spare_ = false;
};

}  // namespace antilearn

#endif
