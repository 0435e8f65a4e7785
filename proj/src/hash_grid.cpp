#include "nrtx/hash_grid.hpp"

#include <cmath>

namespace nrtx {

int HashGridConfig::level_resolution(int level) const {
  return static_cast<int>(std::floor(base_resolution * std::pow(per_level_scale, level)));
}

void HashGrid::init(Rng& rng) {
  table.resize(static_cast<int64_t>(config.levels) * config.table_size() *
               config.features_per_level);
  for (auto& v : table) v = rng.uniform(-1e-4, 1e-4);
}

uint32_t hash_corner(int64_t ix, int64_t iy, int64_t iz, int table_size_log2) {
  constexpr uint64_t kPrimes[3] = {1ull, 2654435761ull, 805459861ull};
  auto h = static_cast<uint64_t>(ix) * kPrimes[0] ^ static_cast<uint64_t>(iy) * kPrimes[1] ^
           static_cast<uint64_t>(iz) * kPrimes[2];
  return static_cast<uint32_t>(h & ((1ull << table_size_log2) - 1));
}

void hash_encode(const HashGrid& grid, Vec3 p, std::span<double> out,
                 HashEncodeTape* tape) {
  auto& cfg = grid.config;
  bool clamped = false;
  for (int axis = 0; axis < 3; axis++) {
    if (p[axis] < 0 || p[axis] > 1) {
      p[axis] = std::clamp(p[axis], 0.0, 1.0);
      clamped = true;
    }
  }
  if (tape) {
    tape->levels = cfg.levels;
    tape->features_per_level = cfg.features_per_level;
    tape->clamped = clamped;
  }

  const int F = cfg.features_per_level;
  for (int level = 0; level < cfg.levels; level++) {
    auto res = cfg.level_resolution(level);
    Vec3 scaled = {p.x * res, p.y * res, p.z * res};
    int64_t base[3];
    Vec3 frac;
    for (int axis = 0; axis < 3; axis++) {
      base[axis] = static_cast<int64_t>(std::floor(scaled[axis]));
      frac[axis] = scaled[axis] - base[axis];
    }
    if (tape) {
      tape->frac[level] = frac;
      tape->scale[level] = res;
    }
    const double* data = grid.level_data(level);
    double acc[8] = {};  // up to features_per_level accumulators (F <= 4)
    for (int corner = 0; corner < 8; corner++) {
      auto cx = (corner >> 0) & 1, cy = (corner >> 1) & 1, cz = (corner >> 2) & 1;
      auto weight = (cx ? frac.x : 1 - frac.x) * (cy ? frac.y : 1 - frac.y) *
                    (cz ? frac.z : 1 - frac.z);
      auto slot = hash_corner(base[0] + cx, base[1] + cy, base[2] + cz,
                              cfg.table_size_log2);
      if (tape) {
        tape->slot[level * 8 + corner] = slot;
        tape->weight[level * 8 + corner] = weight;
      }
      const double* entry = data + static_cast<int64_t>(slot) * F;
      for (int f = 0; f < F; f++) acc[f] += weight * entry[f];
    }
    for (int f = 0; f < F; f++) out[level * F + f] = acc[f];
  }
}

void hash_encode_backward(const HashGrid& grid, const HashEncodeTape& tape,
                          std::span<const double> d_out, std::span<double> grad_table,
                          Vec3* d_point) {
  auto& cfg = grid.config;
  const int F = cfg.features_per_level;
  const int64_t level_stride = static_cast<int64_t>(cfg.table_size()) * F;
  Vec3 dp{};
  for (int level = 0; level < tape.levels; level++) {
    auto frac = tape.frac[level];
    const double* level_table = grid.level_data(level);
    for (int corner = 0; corner < 8; corner++) {
      auto cx = (corner >> 0) & 1, cy = (corner >> 1) & 1, cz = (corner >> 2) & 1;
      auto weight = tape.weight[level * 8 + corner];
      auto slot = tape.slot[level * 8 + corner];
      double* grad_entry = grad_table.data() + level * level_stride +
                           static_cast<int64_t>(slot) * F;
      for (int f = 0; f < F; f++) grad_entry[f] += weight * d_out[level * F + f];

      if (d_point) {
        // d(weight)/d(frac), one factor replaced by its sign per axis.
        auto wx = cx ? frac.x : 1 - frac.x;
        auto wy = cy ? frac.y : 1 - frac.y;
        auto wz = cz ? frac.z : 1 - frac.z;
        Vec3 dw = {(cx ? 1.0 : -1.0) * wy * wz, wx * (cy ? 1.0 : -1.0) * wz,
                   wx * wy * (cz ? 1.0 : -1.0)};
        const double* entry = level_table + static_cast<int64_t>(slot) * F;
        double dot_feat = 0;
        for (int f = 0; f < F; f++) dot_feat += entry[f] * d_out[level * F + f];
        dp += (dot_feat * tape.scale[level]) * dw;
      }
    }
  }
  if (d_point) *d_point += dp;
}

}  // namespace nrtx
