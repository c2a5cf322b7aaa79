#pragma once

#include <cstdint>
#include <random>
#include <string_view>

namespace steinmp {

// Deterministic random stream. Wraps mt19937_64 with explicit uniform/normal
// transforms so sequences are identical across standard library
// implementations. All randomness in the toolkit flows from one root seed
// through named substreams (see substream()).
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : gen_(seed) {}

  // Independent stream derived from (seed, name), e.g. substream(s, "init").
  static Rng substream(std::uint64_t seed, std::string_view name);

  std::uint64_t next_u64() { return gen_(); }

  // Uniform in [0, 1), 53-bit resolution.
  double uniform() {
    return static_cast<double>(gen_() >> 11) * 0x1.0p-53;
  }

  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

  // Standard normal via Box-Muller (pairs cached).
  double normal();

 private:
  std::mt19937_64 gen_;
  double spare_ = 0.0;
  bool has_spare_ = false;
};

}  // namespace steinmp
