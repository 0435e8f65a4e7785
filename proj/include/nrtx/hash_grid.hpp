#pragma once

#include <array>
#include <cstdint>
#include <span>
#include <vector>

#include "nrtx/math.hpp"
#include "nrtx/rng.hpp"

namespace nrtx {

struct HashGridConfig {
  int levels = 8;
  int base_resolution = 16;
  double per_level_scale = 1.5;
  int table_size_log2 = 15;  // entries per level, power of two
  int features_per_level = 2;

  int table_size() const { return 1 << table_size_log2; }
  int feature_dim() const { return levels * features_per_level; }
  int level_resolution(int level) const;
};

constexpr int kMaxHashLevels = 16;

// Records the entries and weights one encode touched, for the backward pass.
struct HashEncodeTape {
  int levels = 0;
  int features_per_level = 0;
  // Per level and corner: flattened table slot (level-local, already scaled
  // by features_per_level is NOT applied; slot < table_size).
  std::array<uint32_t, kMaxHashLevels * 8> slot{};
  std::array<double, kMaxHashLevels * 8> weight{};
  std::array<Vec3, kMaxHashLevels> frac{};     // in-cell coordinates
  std::array<double, kMaxHashLevels> scale{};  // d(cell coord)/d(unit point)
  bool clamped = false;
};

// Multi-resolution hashed feature table; entries are trainable.
struct HashGrid {
  HashGridConfig config;
  std::vector<double> table;  // [level][slot][feature]

  int64_t param_count() const { return static_cast<int64_t>(table.size()); }
  void init(Rng& rng);  // uniform in [-1e-4, 1e-4]

  double* level_data(int level) {
    return table.data() +
           static_cast<int64_t>(level) * config.table_size() * config.features_per_level;
  }
  const double* level_data(int level) const {
    return table.data() +
           static_cast<int64_t>(level) * config.table_size() * config.features_per_level;
  }
};

// Trilinear hashed interpolation of p (unit-cube coordinates, clamped with a
// tape flag outside). Writes config.feature_dim() values to `out`.
void hash_encode(const HashGrid& grid, Vec3 p, std::span<double> out,
                 HashEncodeTape* tape = nullptr);

// Accumulates d(loss)/d(table) into grad_table (same layout as the table)
// given d(loss)/d(features); optionally adds the chain to the query point.
void hash_encode_backward(const HashGrid& grid, const HashEncodeTape& tape,
                          std::span<const double> d_out, std::span<double> grad_table,
                          Vec3* d_point = nullptr);

// XOR-of-prime-multiplies corner hash, modulo the table size.
uint32_t hash_corner(int64_t ix, int64_t iy, int64_t iz, int table_size_log2);

}  // namespace nrtx
