#pragma once

#include <cstdint>
#include <random>
#include <vector>

namespace heatcast {

// Portable seeded stream: std::mt19937_64 output is fixed by the standard,
// and every derived variate below is computed here rather than through
// <random> distributions, whose algorithms are implementation-defined.
class Rng {
 public:
  static constexpr const char* kIdentity = "mt19937_64/heatcast-v1";

  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  std::uint64_t next_u64() { return engine_(); }

  // Uniform on [0, 1) with 53 random bits.
  double uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }

  // Unbiased integer in [0, bound).
  std::uint64_t below(std::uint64_t bound);

  // Marsaglia polar method.
  double normal();

  // Exactly `count` distinct indices from [0, n) marked true.
  std::vector<bool> subsample_mask(std::size_t n, std::size_t count);

 private:
  std::mt19937_64 engine_;
  bool has_spare_ = false;
  double spare_ = 0.0;
};

}  // namespace heatcast
