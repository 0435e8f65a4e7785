#pragma once

#include <array>
#include <optional>

#include "nrtx/field.hpp"
#include "nrtx/projection.hpp"

namespace nrtx {

// One latent tile scanned off the base shape. Features hold the f channels
// first (used for matching), then the f_hat channels (carried passively).
struct FeaturePatch {
  int resolution = 128;
  int channels = 0;
  int f_channels = 0;
  std::vector<float> features;   // R*R*C, row-major texels
  std::vector<float> quats;      // R*R*4 (w,x,y,z): rotation part of T_s^-1 T_c
  std::vector<uint8_t> valid;    // ray hits
  Mat3 t_s;                      // sampling frame (columns t, b, n); flips negate axes
  uint32_t flags = 0;            // bit0 = u flip, bit1 = v flip
  double mean_ray_distance = 0;
  double world_size = 0;

  bool flip_u() const { return flags & 1; }
  bool flip_v() const { return flags & 2; }
  size_t texel(int i, int j) const { return size_t(i) * resolution + j; }
  const float* feature_at(int i, int j) const {
    return features.data() + texel(i, j) * channels;
  }
};

struct PoissonSample {
  SurfacePoint point;
  Mat3 frame;  // face frame at the sample
};

struct PoissonResult {
  std::vector<PoissonSample> samples;
  double radius = 0;     // ideal packing radius for the requested count
  bool truncated = false;  // fewer samples than requested
};

// Blue-noise surface samples by weighted sample elimination from an
// area-weighted oversampling.
PoissonResult poisson_disk_sample(const TriangleMesh& mesh, int target_count, Rng& rng);

struct ExtractParams {
  int resolution = 128;
  double world_size = 0;            // patch extent; 0 = 8x poisson radius (set by caller)
  double curvature_threshold = 0.5;  // x world_size, max ray-distance deviation
  double max_miss_fraction = 0.1;
};

enum class PatchReject { none = 0, misses = 1, curvature = 2 };

// Scans an R x R ray array from the tangent plane along -frame normal and
// fetches latent features at the hits. Empty when the curvature filter or
// the miss budget rejects the patch.
std::optional<FeaturePatch> extract_patch(const TriangleMesh& mesh, const Bvh& bvh,
                                          const TextureField& field, Vec3 center,
                                          const Mat3& frame, const ExtractParams& params,
                                          PatchReject* reject = nullptr);

// (identity, u flip, v flip, both); mirrored grids, flipped T_s axes, and
// conjugated residual rotations. Involutive bit-for-bit.
std::array<FeaturePatch, 4> augment_flips(const FeaturePatch& patch);
FeaturePatch flip_patch(const FeaturePatch& patch, bool flip_u, bool flip_v);

// Originals plus implicit flip variants; entry id = source*4 + variant.
struct PatchLibrary {
  int resolution = 0;
  int channels = 0;
  int f_channels = 0;
  double world_size = 0;
  std::vector<FeaturePatch> sources;  // unflipped accepted patches

  int entry_count() const { return int(sources.size()) * 4; }
  static constexpr uint32_t variant_of(uint32_t entry) { return entry & 3u; }
  const FeaturePatch& source_of(uint32_t entry) const { return sources[entry >> 2]; }

  // Texel lookup with the variant's mirroring applied.
  const float* entry_feature(uint32_t entry, int i, int j) const {
    auto& src = source_of(entry);
    remap(entry, i, j);
    return src.feature_at(i, j);
  }
  bool entry_valid(uint32_t entry, int i, int j) const {
    auto& src = source_of(entry);
    remap(entry, i, j);
    return src.valid[src.texel(i, j)] != 0;
  }
  Quat entry_quat(uint32_t entry, int i, int j) const;
  FeaturePatch materialize(uint32_t entry) const;

 private:
  void remap(uint32_t entry, int& i, int& j) const {
    if (entry & 1u) j = resolution - 1 - j;
    if (entry & 2u) i = resolution - 1 - i;
  }
};

struct ExtractStats {
  int attempted = 0;
  int accepted = 0;
  int rejected_curvature = 0;
  int rejected_miss = 0;
};

PatchLibrary build_patch_library(const TriangleMesh& mesh, const Bvh& bvh,
                                 const TextureField& field, int target_count,
                                 const ExtractParams& params, Rng& rng,
                                 ExtractStats* stats = nullptr);

// "NRTXLIB" container.
void save_patch_library(const PatchLibrary& lib, const std::string& path);
PatchLibrary load_patch_library(const std::string& path);

}  // namespace nrtx
