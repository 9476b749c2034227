#pragma once

#include <cstdint>
#include <random>
#include <string_view>
#include <utility>
#include <vector>

namespace moso {

/// Deterministic random source. std::mt19937_64 output is fully specified
/// by the standard, and the distributions below are hand-rolled instead of
/// using std::*_distribution (whose streams are implementation-defined),
/// so equal seeds produce equal bytes on every platform.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  std::uint64_t next_u64() { return engine_(); }

  /// Uniform double in [0, 1), 53-bit resolution.
  double uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }

  /// Uniform double strictly inside (0, 1).
  double uniform_open() {
    return (static_cast<double>(engine_() >> 11) + 0.5) * 0x1.0p-53;
  }

  /// Unbiased integer in [0, bound). bound must be >= 1.
  std::uint64_t below(std::uint64_t bound);

  /// Standard normal deviate (Box-Muller, two draws per call).
  double normal();

  /// Fisher-Yates shuffle driven by below().
  template <typename T>
  void shuffle(std::vector<T>& values) {
    for (std::size_t i = values.size(); i > 1; --i) {
      std::swap(values[i - 1], values[static_cast<std::size_t>(below(i))]);
    }
  }

 private:
  std::mt19937_64 engine_;
};

/// Fans one base seed out into independent component seeds. The label keeps
/// unrelated consumers (shuffling, noise, init, ...) on unrelated streams
/// even when they share the same base seed and index.
std::uint64_t derive_seed(std::uint64_t base, std::string_view label,
                          std::uint64_t index = 0);

}  // namespace moso
