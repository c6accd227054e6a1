#pragma once

#include <cstdint>
#include <limits>

namespace bpre {

// splitmix64 finalizer (Vigna). This is the stated 64-bit mixing function
// used to derive independent substreams from (seed, replicate, generation),
// which makes every simulation a pure function of its keys and therefore
// invariant to evaluation order and thread count.
inline std::uint64_t mix64(std::uint64_t z) {
  z += 0x9e3779b97f4a7c15ULL;
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

// splitmix64 stream; satisfies UniformRandomBitGenerator.
class SplitMix64 {
 public:
  using result_type = std::uint64_t;

  explicit SplitMix64(std::uint64_t seed) : state_(seed) {}

  static constexpr result_type min() { return 0; }
  static constexpr result_type max() {
    return std::numeric_limits<result_type>::max();
  }

  result_type operator()() {
    state_ += 0x9e3779b97f4a7c15ULL;
    std::uint64_t z = state_;
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
  }

 private:
  std::uint64_t state_;
};

// Hash-chains up to three keys into the master seed.
inline std::uint64_t mixed_key(std::uint64_t seed, std::uint64_t a,
                               std::uint64_t b = 0, std::uint64_t c = 0) {
  std::uint64_t h = mix64(seed);
  h = mix64(h ^ (a + 1));
  h = mix64(h ^ (b + 1));
  h = mix64(h ^ (c + 1));
  return h;
}

// Keyed substream.
inline SplitMix64 substream(std::uint64_t seed, std::uint64_t a,
                            std::uint64_t b = 0, std::uint64_t c = 0) {
  return SplitMix64(mixed_key(seed, a, b, c));
}

}  // namespace bpre
