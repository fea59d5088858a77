#pragma once

#include <cstdint>
#include <string_view>
#include <vector>

namespace biasbench {

// Deterministic counter-based generator (SplitMix64 output function over a
// derived stream key). Every consumer of randomness derives its own stream:
//
//   key     = mix(mix(mix(seed) ^ repetition_index) ^ fnv1a64(purpose))
//   draw_i  = mix(key + (i+1) * 0x9E3779B97F4A7C15)
//
// so streams are independent of call order, parallel-safe, and reproducible
// bitwise across runs and platforms. `purpose` is a short tag naming the
// consumer ("make_split", "synth:d0:c2", ...).
class Rng {
 public:
  Rng(std::uint64_t seed, std::uint64_t repetition_index, std::string_view purpose);

  std::uint64_t next_u64();
  // Uniform in [0, 1) with 53 random bits.
  double next_double();
  // Uniform in [0, n), unbiased (rejection sampling). n must be > 0.
  std::uint64_t next_below(std::uint64_t n);
  // Standard normal via Box-Muller; draws two uniforms per pair of outputs.
  double next_gaussian();

  // Deterministic Fisher-Yates shuffle.
  template <typename T>
  void shuffle(std::vector<T>& v) {
    for (std::size_t i = v.size(); i > 1; --i) {
      std::size_t j = static_cast<std::size_t>(next_below(i));
      std::swap(v[i - 1], v[j]);
    }
  }

  // k distinct indices sampled uniformly from [0, n), in shuffled order.
  std::vector<std::size_t> sample_without_replacement(std::size_t n, std::size_t k);

  static std::uint64_t mix(std::uint64_t z);
  static std::uint64_t fnv1a64(std::string_view s);
  static std::uint64_t derive_key(std::uint64_t seed, std::uint64_t repetition_index,
                                  std::string_view purpose);

 private:
  std::uint64_t key_ = 0;
  std::uint64_t counter_ = 0;
  double cached_gaussian_ = 0.0;
  bool has_cached_gaussian_ = false;
};

}  // namespace biasbench
