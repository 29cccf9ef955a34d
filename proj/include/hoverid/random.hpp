#pragma once

#include <cstdint>
#include <optional>
#include <random>

namespace hoverid {

// Seeded generator for weights and measurement noise. The engine is the
// standard 64-bit Mersenne twister, whose output sequence is fixed by the
// C++ standard; uniform and Gaussian draws are derived here rather than
// through <random> distributions, whose algorithms are implementation-defined.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  std::uint64_t next_u64() { return engine_(); }
  // Uniform on [0, 1) with 53 random bits.
  double uniform();
  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }
  // Standard normal by the Box-Muller transform; draws come in pairs.
  double gaussian();

 private:
  std::mt19937_64 engine_;
  std::optional<double> spare_;
};

}  // namespace hoverid
