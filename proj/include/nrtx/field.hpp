#pragma once

#include <string>
#include <vector>

#include "nrtx/checkpoint.hpp"
#include "nrtx/decoder.hpp"
#include "nrtx/hash_grid.hpp"
#include "nrtx/sh.hpp"

namespace nrtx {

// Scene-bounds normalization into the hash-grid unit cube (uniform scale).
struct DomainMap {
  Vec3 origin;
  double inv_scale = 1;

  static DomainMap from_bounds(const Bounds3& bounds, double pad);
  Vec3 to_unit(Vec3 x) const { return (x - origin) * inv_scale; }
};

struct FieldConfig {
  HashGridConfig grid_f{.levels = 8, .base_resolution = 16, .per_level_scale = 1.5,
                        .table_size_log2 = 15, .features_per_level = 2};
  HashGridConfig grid_fhat{.levels = 4, .base_resolution = 16, .per_level_scale = 1.5,
                           .table_size_log2 = 15, .features_per_level = 2};
  int decoder_width = 64;
  int decoder_depth = 3;
  int fourier_frequencies = 4;
  int diffuse_order = 2;
  int specular_order = 4;
};

// The trainable texture representation: two feature grids, the attribute
// decoder and the capture lighting, with the world-to-grid mapping.
struct TextureField {
  FieldConfig config;
  HashGrid grid_f, grid_fhat;
  Decoder decoder;
  ShLighting lighting;
  DomainMap domain;

  void init(const FieldConfig& cfg, const Bounds3& scene_bounds, Rng& rng);
  int f_dim() const { return grid_f.config.feature_dim(); }
  int fhat_dim() const { return grid_fhat.config.feature_dim(); }

  // Feature fetch at a surface footpoint (world coordinates).
  void features_at(Vec3 footpoint, std::span<double> f, std::span<double> f_hat,
                   HashEncodeTape* tape_f = nullptr,
                   HashEncodeTape* tape_fhat = nullptr) const;

  std::vector<NamedTensor> to_tensors() const;
  void from_tensors(const std::vector<NamedTensor>& tensors);
};

// Per-sample forward record. Reused across samples to avoid allocation.
struct SampleTape {
  HashEncodeTape hash_f, hash_fhat;
  std::vector<double> f, f_hat;
  DecodeTape decode;
  ShadeTape shade;
  FrameTransport transport;
  bool shaded = false;
};

struct SampleResult {
  double sigma = 0;
  Vec3 color;
  FieldOutputs attributes;
};

// Full evaluation at a projected sample: features -> attributes -> fine
// normal -> SH shading. view_dir points from the camera toward the point.
SampleResult evaluate_sample(const TextureField& field, Vec3 footpoint, double s,
                             const FrameTransport& transport, Vec3 view_dir,
                             SampleTape* tape = nullptr);

// Decode+shade given externally fetched features (the texture-mapped path).
SampleResult evaluate_features(const TextureField& field, std::span<const double> f,
                               std::span<const double> f_hat, double s,
                               const FrameTransport& transport, Vec3 view_dir,
                               SampleTape* tape = nullptr);

// Per-worker gradient accumulator. Grid gradients are dense arrays with a
// touched-slot list so clearing and reduction cost is proportional to the
// batch, not the table.
struct FieldGrads {
  std::vector<double> grid_f, grid_fhat;
  std::vector<int64_t> touched_f, touched_fhat;  // base offsets of touched entries
  DecoderGrads decoder;
  std::array<std::array<double, kShMaxCoeffs>, 3> lighting{};

  void init_like(const TextureField& field);
  void clear_small();  // decoder + lighting
  // Adds this sink's grid gradients into `total` and zeroes them here.
  void reduce_grids_into(FieldGrads& total);
  void reduce_small_into(FieldGrads& total);
  void clear_grids();  // zero touched entries, drop the lists
};

// Backward of evaluate_sample/evaluate_features. d_n_f_extra adds an
// upstream gradient on the fine normal (normal supervision). When d_query
// is non-null it receives the chain to the world query point through the
// defined projection rule (Eq. 2 semantics: footpoint tangential, s normal).
void backward_sample(const TextureField& field, const SampleTape& tape, double d_sigma,
                     Vec3 d_color, FieldGrads& sink, Vec3 coarse_normal = {},
                     Vec3* d_query = nullptr, Vec3 d_n_f_extra = {});

// Hash-table gradient of the f features alone (cluster regularizer path).
void add_grid_f_gradient(const TextureField& field, const HashEncodeTape& tape,
                         std::span<const double> d_f, FieldGrads& sink);

}  // namespace nrtx
