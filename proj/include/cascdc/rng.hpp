#pragma once

#include <cmath>
#include <cstdint>
#include <random>
#include <string_view>

namespace cascdc {

/// splitmix64 finalizer; used to derive independent seeds.
constexpr std::uint64_t mix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

constexpr std::uint64_t hash_name(std::string_view name) {
  std::uint64_t h = 0xcbf29ce484222325ULL;  // FNV-1a
  for (char c : name) {
    h ^= static_cast<unsigned char>(c);
    h *= 0x100000001b3ULL;
  }
  return h;
}

/// A named position in the seed tree. Every random consumer derives its
/// generator from a root seed plus a path of (name, index) hops, so results
/// never depend on scheduling order.
class SeedStream {
 public:
  constexpr explicit SeedStream(std::uint64_t seed) : state_(mix64(seed)) {}

  constexpr SeedStream child(std::string_view name, std::uint64_t index = 0) const {
    SeedStream s(0);
    s.state_ = mix64(state_ ^ mix64(hash_name(name) + 0x632be59bd9b4e019ULL * (index + 1)));
    return s;
  }

  constexpr std::uint64_t seed() const { return state_; }

  std::mt19937_64 engine() const { return std::mt19937_64(state_); }

 private:
  std::uint64_t state_;
};

using Engine = std::mt19937_64;

/// Uniform double in [0, 1) from the top 53 bits; identical on every platform,
/// unlike std::uniform_real_distribution.
inline double uniform01(Engine& g) {
  return static_cast<double>(g() >> 11) * 0x1.0p-53;
}

/// Uniform integer in [0, n). Rejection sampling keeps it unbiased and portable.
inline std::uint64_t uniform_index(Engine& g, std::uint64_t n) {
  const std::uint64_t limit = ~std::uint64_t{0} - (~std::uint64_t{0} % n);
  std::uint64_t x;
  do {
    x = g();
  } while (x >= limit);
  return x % n;
}

/// Standard normal via Box-Muller on the portable uniform.
inline double standard_normal(Engine& g) {
  double u1 = uniform01(g);
  while (u1 <= 0.0) u1 = uniform01(g);
  const double u2 = uniform01(g);
  return std::sqrt(-2.0 * std::log(u1)) * std::cos(6.283185307179586476925 * u2);
}

}  // namespace cascdc
