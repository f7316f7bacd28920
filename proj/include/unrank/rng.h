#ifndef UNRANK_RNG_H_
#define UNRANK_RNG_H_

#include <cmath>
#include <cstddef>
#include <cstdint>
#include <numbers>
#include <random>
#include <utility>
#include <vector>

namespace unrank {

// Seeded random source. The standard distributions are implementation
// defined, so every draw here is derived directly from the 64-bit engine
// output to keep corpora and runs identical across toolchains.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  // Uniform in [0, 1) with 53 bits of precision.
  double Uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }

  double Uniform(double lo, double hi) { return lo + (hi - lo) * Uniform(); }

  // Uniform integer in [0, n). Rejection sampling avoids modulo bias.
  std::size_t Index(std::size_t n) {
    const std::uint64_t bound = static_cast<std::uint64_t>(n);
    const std::uint64_t limit = UINT64_MAX - UINT64_MAX % bound;
    std::uint64_t x;
    do {
      x = engine_();
    } while (x >= limit);
    return static_cast<std::size_t>(x % bound);
  }

  // Standard normal via Box-Muller; the second variate is discarded.
  double Normal() {
    double u1 = Uniform();
    while (u1 <= 0.0) u1 = Uniform();
    const double u2 = Uniform();
    return std::sqrt(-2.0 * std::log(u1)) *
           std::cos(2.0 * std::numbers::pi * u2);
  }

  template <typename T>
  void Shuffle(std::vector<T>& v) {
    for (std::size_t i = v.size(); i > 1; --i) {
      std::swap(v[i - 1], v[Index(i)]);
    }
  }

  // k distinct positions out of [0, n), in draw order. Requires k <= n.
  std::vector<std::size_t> SampleWithoutReplacement(std::size_t n,
                                                    std::size_t k) {
    std::vector<std::size_t> pool(n);
    for (std::size_t i = 0; i < n; ++i) pool[i] = i;
    for (std::size_t i = 0; i < k; ++i) {
      std::swap(pool[i], pool[i + Index(n - i)]);
    }
    pool.resize(k);
    return pool;
  }

  std::vector<std::size_t> SampleWithReplacement(std::size_t n, std::size_t k) {
    std::vector<std::size_t> out(k);
    for (auto& x : out) x = Index(n);
    return out;
  }

 private:
  std::mt19937_64 engine_;
};

}  // namespace unrank

#endif  // UNRANK_RNG_H_
