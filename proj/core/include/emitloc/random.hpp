#pragma once

#include <cmath>
#include <cstdint>
#include <random>
#include <string_view>

#include "emitloc/types.hpp"

namespace emitloc {

using Rng = std::mt19937_64;

/// SplitMix64 finalizer; good avalanche for counter-derived seeds.
std::uint64_t mix64(std::uint64_t v);

/// 64-bit FNV-1a over a byte range.
std::uint64_t fnv1a64(const void* data, std::size_t size, std::uint64_t seed = 0xcbf29ce484222325ULL);

/// Stable hash of a stream tag such as "noise" or "channel".
std::uint64_t tag_hash(std::string_view tag);

/// Derives an independent sub-seed from (seed, a, b, tag) without any
/// sequential generator state, so trials can run in any order.
std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t a, std::uint64_t b, std::string_view tag);

inline Rng make_rng(std::uint64_t seed, std::uint64_t a, std::uint64_t b, std::string_view tag) {
  return Rng(derive_seed(seed, a, b, tag));
}

/// Circularly-symmetric complex Gaussian with E|z|^2 = variance.
inline cplx complex_gaussian(Rng& rng, double variance) {
  std::normal_distribution<double> n(0.0, 1.0);
  const double s = std::sqrt(variance / 2.0);
  const double re = n(rng);
  const double im = n(rng);
  return {s * re, s * im};
}

}  // namespace emitloc
