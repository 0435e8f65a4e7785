#pragma once

#include <cstdint>
#include <string_view>

namespace nrtx {

// PCG32: small, fast, reproducible across platforms.
struct Rng {
  uint64_t state = 0x853c49e6748fea9bULL;
  uint64_t inc = 0xda3e39cb94b95bdbULL;

  Rng() = default;
  explicit Rng(uint64_t seed, uint64_t stream = 1) {
    state = 0;
    inc = (stream << 1u) | 1u;
    next_u32();
    state += seed;
    next_u32();
  }

  uint32_t next_u32() {
    auto old = state;
    state = old * 6364136223846793005ULL + inc;
    auto xorshifted = static_cast<uint32_t>(((old >> 18u) ^ old) >> 27u);
    auto rot = static_cast<uint32_t>(old >> 59u);
    return (xorshifted >> rot) | (xorshifted << ((-rot) & 31));
  }

  // Uniform in [0, n) without modulo bias.
  uint32_t next_below(uint32_t n) {
    if (n <= 1) return 0;
    auto threshold = (-n) % n;
    for (;;) {
      auto r = next_u32();
      if (r >= threshold) return r % n;
    }
  }

  uint64_t next_u64() { return (uint64_t(next_u32()) << 32) | next_u32(); }

  // Uniform in [0, 1).
  double uniform() { return next_u32() * (1.0 / 4294967296.0); }
  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

  double normal() {
    // Box-Muller; discards the second variate.
    double u1 = 0;
    while (u1 == 0) u1 = uniform();
    auto u2 = uniform();
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * 3.14159265358979323846 * u2);
  }
};

inline uint64_t hash_name(std::string_view name) {
  // FNV-1a.
  uint64_t h = 1469598103934665603ULL;
  for (auto c : name) {
    h ^= static_cast<unsigned char>(c);
    h *= 1099511628211ULL;
  }
  return h;
}

// All randomness in the pipeline flows from one root seed; subsystems draw
// independent streams by name so each stage is reproducible in isolation.
inline Rng named_stream(uint64_t root_seed, std::string_view name, uint64_t index = 0) {
  auto h = hash_name(name);
  return Rng(root_seed ^ (h * 0x9e3779b97f4a7c15ULL), h + index * 2 + 1);
}

}  // namespace nrtx
