#pragma once

// Portable seeded randomness. Draws are derived from a root seed and a
// context string so every sampling site is reproducible on its own, and
// bounded draws avoid the implementation-defined std distributions.

#include <cstdint>
#include <random>
#include <string_view>
#include <utility>
#include <vector>

namespace guidex {

/// Mixes `seed` with a context label into an independent stream seed.
std::uint64_t derive_seed(std::uint64_t seed, std::string_view context);

class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}
  Rng(std::uint64_t seed, std::string_view context) : engine_(derive_seed(seed, context)) {}

  /// Uniform integer in [0, n). `n` must be positive.
  std::size_t uniform_index(std::size_t n);

  template <typename T>
  void shuffle(std::vector<T>& items) {
    for (std::size_t i = items.size(); i > 1; --i) {
      std::swap(items[i - 1], items[uniform_index(i)]);
    }
  }

 private:
  std::mt19937_64 engine_;
};

}  // namespace guidex
