#pragma once

#include <cmath>
#include <cstdint>
#include <span>

#include "sclab/common.hpp"

namespace sclab {

namespace detail {
inline constexpr std::uint64_t kGolden = 0x9e3779b97f4a7c15ull;

/// SplitMix64 finalizer (Steele, Lea, Flood 2014).
inline std::uint64_t mix64(std::uint64_t z) {
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
  return z ^ (z >> 31);
}
}  // namespace detail

/**
 * Counter-based SplitMix64 generator with substreams.
 *
 * Output i of stream k under seed s is mix(K + (i+1)*gamma) with stream key
 * K = mix(s + (k+1)*gamma), where mix is the SplitMix64 finalizer and gamma
 * the 64-bit golden-ratio increment. Draws depend only on (seed, stream,
 * counter), so substreams can be consumed in any order, by any thread, and
 * always reproduce the same values.
 */
class CounterRng {
 public:
  explicit CounterRng(std::uint64_t seed, std::uint64_t stream = 0)
      : key_(detail::mix64(seed + (stream + 1) * detail::kGolden)) {}

  std::uint64_t next_u64() { return detail::mix64(key_ + (++counter_) * detail::kGolden); }

  /// Uniform draw in the open interval (0, 1).
  double next_uniform() {
    return (static_cast<double>(next_u64() >> 11) + 0.5) * 0x1.0p-53;
  }

  /// Standard exponential via inversion; strictly positive.
  double next_exponential() { return -std::log(next_uniform()); }

  bool next_bernoulli(double p) { return next_uniform() < p; }

  /// Integer in [lo, hi] inclusive.
  std::int64_t next_int(std::int64_t lo, std::int64_t hi) {
    return lo + static_cast<std::int64_t>(next_uniform() * static_cast<double>(hi - lo + 1));
  }

  /// Index drawn from an (assumed normalized) probability vector.
  std::size_t next_index(std::span<const double> probs) {
    double u = next_uniform();
    double acc = 0.0;
    for (std::size_t i = 0; i + 1 < probs.size(); ++i) {
      acc += probs[i];
      if (u < acc) return i;
    }
    return probs.empty() ? 0 : probs.size() - 1;
  }

 private:
  std::uint64_t key_;
  std::uint64_t counter_ = 0;
};

}  // namespace sclab
