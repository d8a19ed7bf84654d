#include "emitloc/random.hpp"

namespace emitloc {

std::uint64_t mix64(std::uint64_t v) {
  v += 0x9e3779b97f4a7c15ULL;
  v = (v ^ (v >> 30)) * 0xbf58476d1ce4e5b9ULL;
  v = (v ^ (v >> 27)) * 0x94d049bb133111ebULL;
  return v ^ (v >> 31);
}

std::uint64_t fnv1a64(const void* data, std::size_t size, std::uint64_t seed) {
  const auto* p = static_cast<const unsigned char*>(data);
  std::uint64_t h = seed;
  for (std::size_t i = 0; i < size; ++i) {
    h ^= p[i];
    h *= 0x100000001b3ULL;
  }
  return h;
}

std::uint64_t tag_hash(std::string_view tag) { return fnv1a64(tag.data(), tag.size()); }

std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t a, std::uint64_t b, std::string_view tag) {
  std::uint64_t h = mix64(a);
  h = mix64(h ^ (b * 0xff51afd7ed558ccdULL));
  h = mix64(h ^ tag_hash(tag));
  return seed ^ h;
}

}  // namespace emitloc
