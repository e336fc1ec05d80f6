#pragma once

#include <cmath>
#include <cstdint>
#include <random>
#include <vector>

namespace botgraph {

// Deterministic RNG. mt19937_64 output is pinned by the standard, but the
// standard *distributions* are not, so all derived draws are implemented
// here to keep results bit-identical across platforms and compilers.
class DetRng {
 public:
  explicit DetRng(uint64_t seed) : eng_(seed) {}

  uint64_t next_u64() { return eng_(); }

  // Uniform in [0, 1) with 53 bits of mantissa.
  double next_unit() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

  double uniform(double lo, double hi) { return lo + (hi - lo) * next_unit(); }

  // Unbiased integer in [0, n) via rejection.
  uint64_t below(uint64_t n) {
    if (n <= 1) return 0;
    uint64_t limit = UINT64_MAX - UINT64_MAX % n;
    uint64_t x;
    do {
      x = next_u64();
    } while (x >= limit);
    return x % n;
  }

  double exponential(double rate) { return -std::log1p(-next_unit()) / rate; }

  // Fisher-Yates.
  template <typename T>
  void shuffle(std::vector<T>& v) {
    for (size_t i = v.size(); i > 1; --i) {
      size_t j = static_cast<size_t>(below(i));
      std::swap(v[i - 1], v[j]);
    }
  }

  // Derive an independent sub-stream seed, e.g. per pipeline stage.
  uint64_t fork(uint64_t salt) {
    uint64_t z = eng_() ^ (salt + 0x9e3779b97f4a7c15ull);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
    return z ^ (z >> 31);
  }

 private:
  std::mt19937_64 eng_;
};

}  // namespace botgraph
