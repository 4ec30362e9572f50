// Seeded random streams. All randomness in the library is derived from an
// explicit Seed; there is no global generator.
#pragma once

#include <cstdint>
#include <random>
#include <string_view>

namespace rpo {

using Rng = std::mt19937_64;

struct Seed {
  std::uint64_t value = 0;

  /// Independent child stream keyed by a component name and an index.
  Seed derive(std::string_view stream, std::uint64_t index = 0) const {
    std::uint64_t h = 0xcbf29ce484222325ULL;  // FNV-1a
    for (char c : stream) {
      h ^= static_cast<unsigned char>(c);
      h *= 0x100000001b3ULL;
    }
    return Seed{mix(mix(value ^ h) + index)};
  }

  friend bool operator==(Seed a, Seed b) { return a.value == b.value; }

 private:
  static std::uint64_t mix(std::uint64_t z) {  // splitmix64 finalizer
    z += 0x9e3779b97f4a7c15ULL;
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
  }
};

inline Rng make_rng(Seed seed) { return Rng(seed.value); }

inline double uniform(Rng& rng, double lo, double hi) {
  return std::uniform_real_distribution<double>(lo, hi)(rng);
}

}  // namespace rpo
