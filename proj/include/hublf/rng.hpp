#pragma once

#include <cstdint>
#include <cstdio>
#include <string>
#include <string_view>

namespace hublf {

/// Uniform double in [0,1) from the top 53 bits of a 64-bit engine draw.
/// Unlike std::uniform_real_distribution this is identical across standard libraries.
template <class Engine>
double unit_uniform(Engine& eng) {
  return static_cast<double>(eng() >> 11) * 0x1.0p-53;
}

/// SplitMix64: tiny counter-based generator, used for per-trial streams.
class SplitMix64 {
 public:
  using result_type = std::uint64_t;
  explicit SplitMix64(std::uint64_t state) : state_(state) {}

  static constexpr result_type min() { return 0; }
  static constexpr result_type max() { return ~result_type{0}; }

  result_type operator()() {
    std::uint64_t z = (state_ += 0x9e3779b97f4a7c15ULL);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
  }

  /// Stream for trial `index` of a run seeded with `seed`; independent of draw order.
  static SplitMix64 for_trial(std::uint64_t seed, std::uint64_t index) {
    SplitMix64 mix(seed);
    const std::uint64_t a = mix();
    SplitMix64 mix2(index ^ a);
    return SplitMix64(mix2() ^ (a << 1));
  }

 private:
  std::uint64_t state_;
};

inline std::uint64_t fnv1a(std::string_view bytes) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

inline std::string fnv1a_hex(std::string_view bytes) {
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(fnv1a(bytes)));
  return buf;
}

}  // namespace hublf
