#pragma once

#include <cstdint>
#include <random>
#include <span>
#include <string_view>
#include <utility>

namespace attrib {

// Seeded random source. Every draw goes through helpers defined here so
// that sequences do not depend on the standard library's distribution
// implementations.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  std::uint64_t Next() { return engine_(); }

  // Uniform on [0, 1).
  double Uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }

  double Uniform(double lo, double hi) { return lo + (hi - lo) * Uniform(); }

  // Uniform integer in [0, n). n must be positive.
  std::size_t Index(std::size_t n);

  // Standard normal via Box-Muller.
  double Normal();

  template <typename T>
  void Shuffle(std::span<T> values) {
    for (std::size_t i = values.size(); i > 1; --i) {
      std::swap(values[i - 1], values[Index(i)]);
    }
  }

 private:
  std::mt19937_64 engine_;
};

// splitmix64 finalizer.
std::uint64_t Mix64(std::uint64_t x);

// Combines a seed with a stream index into an independent seed.
std::uint64_t DeriveSeed(std::uint64_t seed, std::uint64_t stream);

// FNV-1a over the bytes, then Mix64. Stable across platforms and runs.
std::uint64_t StableHash(std::string_view text);

}  // namespace attrib
