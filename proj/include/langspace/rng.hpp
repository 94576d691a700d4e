#ifndef LANGSPACE_RNG_HPP
#define LANGSPACE_RNG_HPP

#include <cmath>
#include <cstdint>
#include <random>
#include <string_view>
#include <vector>

namespace langspace {

/// FNV-1a 64-bit hash over raw bytes. Used for content digests and for
/// deriving sub-seeds from string tags.
inline std::uint64_t fnv1a64(const void* data, std::size_t len,
                             std::uint64_t seed = 14695981039346656037ULL) {
  const auto* p = static_cast<const unsigned char*>(data);
  std::uint64_t h = seed;
  for (std::size_t i = 0; i < len; ++i) {
    h ^= p[i];
    h *= 1099511628211ULL;
  }
  return h;
}

inline std::uint64_t fnv1a64(std::string_view s,
                             std::uint64_t seed = 14695981039346656037ULL) {
  return fnv1a64(s.data(), s.size(), seed);
}

/// splitmix64 step; the standard finalizer makes good sub-seeds out of
/// correlated inputs.
inline std::uint64_t splitmix64(std::uint64_t& state) {
  std::uint64_t z = (state += 0x9e3779b97f4a7c15ULL);
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

/// Deterministic sub-seed for a named stage of a pipeline.
inline std::uint64_t derive_seed(std::uint64_t base, std::string_view tag) {
  std::uint64_t state = base ^ fnv1a64(tag);
  return splitmix64(state);
}

/// Seeded PRNG with hand-rolled distributions. std::uniform_real_distribution
/// and friends are not bit-stable across standard library implementations, so
/// everything that can land in a committed artifact goes through these.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  std::uint64_t next_u64() { return engine_(); }

  /// Uniform in [0, 1) with 53 bits of precision.
  double uniform() {
    return static_cast<double>(engine_() >> 11) * 0x1.0p-53;
  }

  /// Uniform in (0, 1]; never zero, safe under log().
  double uniform_pos() {
    return static_cast<double>((engine_() >> 11) + 1) * 0x1.0p-53;
  }

  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

  /// Standard normal via Box-Muller (no cached spare: two draws per call,
  /// deterministic call-for-call).
  double normal() {
    double u1 = uniform_pos();
    double u2 = uniform();
    return std::sqrt(-2.0 * std::log(u1)) *
           std::cos(2.0 * 3.14159265358979323846 * u2);
  }

  /// Uniform integer in [0, n); n must be > 0. Modulo bias is below 2^-53
  /// for any n this project uses, and determinism matters more here.
  std::size_t index(std::size_t n) {
    return static_cast<std::size_t>(engine_() % n);
  }

  /// Fisher-Yates shuffle.
  template <typename T>
  void shuffle(std::vector<T>& v) {
    for (std::size_t i = v.size(); i > 1; --i) {
      std::size_t j = index(i);
      std::swap(v[i - 1], v[j]);
    }
  }

 private:
  std::mt19937_64 engine_;
};

}  // namespace langspace

#endif  // LANGSPACE_RNG_HPP
