#pragma once

#include <cstdint>
#include <cstddef>
#include <vector>

namespace ngcg {

// Counter-based 64-bit generator (SplitMix64 output function applied to a
// strided counter).  Streams derived from (seed, tag, index) are independent
// and reproducible regardless of call order or worker count, which is what
// the dataset and training pipelines rely on for bit-exact parallelism.
class Rng {
 public:
  explicit Rng(std::uint64_t seed = 0) : state_(seed) {}

  static std::uint64_t mix(std::uint64_t z) {
    z += 0x9e3779b97f4a7c15ULL;
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
  }

  // Child stream keyed by a tag and index; used as derive(seed, kTagX, i).
  static Rng derive(std::uint64_t seed, std::uint64_t tag, std::uint64_t index = 0) {
    return Rng(mix(mix(seed ^ tag) + index));
  }

  std::uint64_t next_u64() {
    state_ += 0x9e3779b97f4a7c15ULL;
    std::uint64_t z = state_;
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
  }

  // Uniform in [0, 1): 53 random mantissa bits.
  double uniform() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

  // Uniform integer in [0, n).
  std::uint64_t below(std::uint64_t n) { return next_u64() % n; }

  // Standard normal via Box-Muller (pair cached).
  double normal();

  // In-place Fisher-Yates shuffle.
  template <typename T>
  void shuffle(std::vector<T>& v) {
    for (std::size_t i = v.size(); i > 1; --i) {
      std::size_t j = static_cast<std::size_t>(below(i));
      std::swap(v[i - 1], v[j]);
    }
  }

 private:
  std::uint64_t state_;
  bool has_cached_ = false;
  double cached_ = 0.0;
};

// Stream tags (arbitrary fixed constants, one per randomness consumer).
inline constexpr std::uint64_t kTagParams = 0x706172616d730000ULL;
inline constexpr std::uint64_t kTagInit = 0x696e697400000000ULL;
inline constexpr std::uint64_t kTagSplit = 0x73706c6974000000ULL;
inline constexpr std::uint64_t kTagNoise = 0x6e6f697365000000ULL;
inline constexpr std::uint64_t kTagWeights = 0x7765696768740000ULL;
inline constexpr std::uint64_t kTagBatch = 0x6261746368000000ULL;
inline constexpr std::uint64_t kTagJitter = 0x6a69747465720000ULL;
inline constexpr std::uint64_t kTagGp = 0x6770000000000000ULL;
inline constexpr std::uint64_t kTagPhiPairs = 0x7068697061697273ULL;
inline constexpr std::uint64_t kTagRestart = 0x7265737461727400ULL;
inline constexpr std::uint64_t kTagProbe = 0x70726f6265000000ULL;

}  // namespace ngcg
