#pragma once

#include <cstdint>
#include <random>

#include <boost/random/normal_distribution.hpp>
#include <boost/random/uniform_int_distribution.hpp>

namespace anchordid {

[[nodiscard]] constexpr std::uint64_t splitmix64(std::uint64_t x) noexcept {
  x += 0x9E3779B97F4A7C15ULL;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
  return x ^ (x >> 31);
}

// Independent streams keyed by (seed, purpose, index, attempt). Draws depend
// only on the key, never on scheduling order.
[[nodiscard]] constexpr std::uint64_t stream_key(std::uint64_t seed, std::uint64_t purpose, std::uint64_t index = 0,
                                                 std::uint64_t attempt = 0) noexcept {
  std::uint64_t h = splitmix64(seed);
  h = splitmix64(h ^ purpose);
  h = splitmix64(h ^ index);
  return splitmix64(h ^ attempt);
}

enum StreamPurpose : std::uint64_t {
  kBootstrapStream = 0x62,
  kCriticalValueStream = 0x6c,
  kSimulationStream = 0x73,
};

// Portable generator: the engine is fully specified by the standard and the
// boost distributions have fixed algorithms, so draws match across platforms.
class Rng {
 public:
  explicit Rng(std::uint64_t key) : engine_(key) {}

  double normal() { return normal_(engine_); }
  int uniform_index(int n) { return boost::random::uniform_int_distribution<int>(0, n - 1)(engine_); }

 private:
  std::mt19937_64 engine_;
  boost::random::normal_distribution<double> normal_;
};

}  // namespace anchordid
