#pragma once

#include <array>
#include <cstdint>
#include <string_view>

namespace echochan {

/// Portable seedable generator: xoshiro256** whose state is filled from a
/// SplitMix64 sequence started at the seed. Output is identical on every
/// platform; the distributions below are implemented here instead of using
/// <random>'s implementation-defined ones.
///
/// Stream splitting: every independent consumer (one matrix, one sequence,
/// one noise source) gets its own generator seeded with
/// derive_seed(parent_seed, stream_id).
class Rng {
 public:
  explicit Rng(std::uint64_t seed);

  std::uint64_t next_u64();
  /// Uniform on [0, 1) with 53 bits of resolution.
  double uniform01();
  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform01(); }
  /// Standard normal via the Box-Muller transform.
  double normal();
  double normal(double mean, double stddev) { return mean + stddev * normal(); }
  bool bernoulli(double p) { return uniform01() < p; }
  /// Uniform integer in [0, n), unbiased; n must be positive.
  std::uint64_t below(std::uint64_t n);

 private:
  std::array<std::uint64_t, 4> s_{};
  double cached_normal_ = 0.0;
  bool has_cached_normal_ = false;
};

std::uint64_t splitmix64(std::uint64_t& state);

/// Seed for substream `stream` of `seed`; a pure function of both inputs.
std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t stream);

/// 64-bit FNV-1a hash, used for named streams and data fingerprints.
std::uint64_t fnv1a(std::string_view bytes, std::uint64_t basis = 0xcbf29ce484222325ULL);

/// Substream keyed by a name, e.g. derive_seed(seed, "w_in").
inline std::uint64_t derive_seed(std::uint64_t seed, std::string_view name) {
  return derive_seed(seed, fnv1a(name));
}

}  // namespace echochan
