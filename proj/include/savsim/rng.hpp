#pragma once

#include <cstdint>
#include <random>
#include <vector>

namespace savsim {

// Deterministic RNG wrapper. Uniform doubles come straight from the raw
// 64-bit stream so draws do not depend on the standard library's
// distribution implementations.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  std::uint64_t next_u64() { return engine_(); }

  // Uniform in [0, 1).
  double uniform() {
    return static_cast<double>(engine_() >> 11) * 0x1.0p-53;
  }

  // Uniform integer in [0, n).
  std::uint64_t below(std::uint64_t n) { return engine_() % n; }

 private:
  std::mt19937_64 engine_;
};

// Logit route choice over route costs (seconds): picks index i with
// probability exp(-theta * cost_i) / sum_j exp(-theta * cost_j), computed
// with costs shifted by their minimum for numerical stability.
int logit_choice(const std::vector<double>& costs, double theta, Rng& rng);

}  // namespace savsim
