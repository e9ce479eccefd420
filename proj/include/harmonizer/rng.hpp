#ifndef HARMONIZER_RNG_HPP
#define HARMONIZER_RNG_HPP

#include <cstdint>
#include <random>
#include <vector>

namespace harmonizer {

// Seeded RNG wrapper. mt19937_64 output is fully specified by the standard;
// we avoid std::uniform_*_distribution and std::shuffle because their draw
// sequences are implementation-defined, which would break byte-identical
// reruns across toolchains.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : gen_(seed) {}

  std::uint64_t u64() { return gen_(); }

  // Uniform in [0, n). Rejection sampling keeps it exactly uniform.
  std::uint64_t below(std::uint64_t n) {
    if (n == 0) return 0;
    const std::uint64_t limit = UINT64_MAX - UINT64_MAX % n;
    std::uint64_t x;
    do { x = gen_(); } while (x >= limit);
    return x % n;
  }

  // Uniform double in [0, 1) with 53 bits of precision.
  double uniform01() { return static_cast<double>(gen_() >> 11) * 0x1.0p-53; }

  bool chance(double p) { return uniform01() < p; }

  template <typename T>
  void shuffle(std::vector<T>& v) {
    for (std::size_t i = v.size(); i > 1; --i) {
      const std::size_t j = static_cast<std::size_t>(below(i));
      std::swap(v[i - 1], v[j]);
    }
  }

  template <typename T>
  const T& pick(const std::vector<T>& v) {
    return v[static_cast<std::size_t>(below(v.size()))];
  }

 private:
  std::mt19937_64 gen_;
};

// FNV-1a, used to derive per-model seeds and to fingerprint input files.
inline std::uint64_t fnv1a64(const void* data, std::size_t n) {
  const auto* p = static_cast<const unsigned char*>(data);
  std::uint64_t h = 1469598103934665603ull;
  for (std::size_t i = 0; i < n; ++i) {
    h ^= p[i];
    h *= 1099511628211ull;
  }
  return h;
}

inline std::uint64_t fnv1a64(const std::string& s) { return fnv1a64(s.data(), s.size()); }

}  // namespace harmonizer

#endif
