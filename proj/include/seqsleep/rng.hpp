#pragma once

#include <cstdint>
#include <random>
#include <string_view>

namespace seqsleep {

// Derives an independent seed for a named substream of a root seed, so that
// data shuffling, initialization and dropout can be varied separately.
std::uint64_t derive_seed(std::uint64_t root, std::string_view stream, std::uint64_t index = 0);

// Platform-independent random source. The standard distributions are
// implementation-defined, so the transforms are spelled out here.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  std::uint64_t next_u64() { return engine_(); }

  // Uniform in [0, 1).
  double uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }

  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

  // Uniform integer in [0, n).
  std::uint64_t below(std::uint64_t n);

  double normal();

  template <class It>
  void shuffle(It first, It last) {
    const auto n = static_cast<std::uint64_t>(last - first);
    for (std::uint64_t i = n; i > 1; --i) {
      const auto j = below(i);
      std::iter_swap(first + (i - 1), first + j);
    }
  }

 private:
  std::mt19937_64 engine_;
  bool has_spare_ = false;
  double spare_ = 0.0;
};

}  // namespace seqsleep
