#include "nrtx/patch.hpp"

#include <algorithm>
#include <cstring>
#include <fstream>
#include <queue>

#include "nrtx/parallel.hpp"

namespace nrtx {

PoissonResult poisson_disk_sample(const TriangleMesh& mesh, int target_count, Rng& rng) {
  PoissonResult out;
  if (target_count < 1) throw std::invalid_argument("target_count must be >= 1");
  auto area = mesh.area();
  out.radius = std::sqrt(area / (2.0 * std::sqrt(3.0) * target_count));

  // Oversample, then eliminate the most crowded candidates (weighted sample
  // elimination) until the target count remains.
  int oversample = std::max(target_count * 4, target_count + 8);
  auto candidates = sample_surface_points(mesh, oversample, rng);
  auto n = int(candidates.size());
  if (n <= target_count) {
    out.truncated = n < target_count;
    for (auto& c : candidates) out.samples.push_back({c, mesh.face_frames[c.face]});
    return out;
  }

  // Neighbor search over a uniform grid of cell 2*r_max.
  auto r_max = out.radius * 2.0;
  auto cell = std::max(r_max, 1e-12);
  std::unordered_map<uint64_t, std::vector<int>> grid;
  auto cell_of = [&](Vec3 p) {
    return SpatialBinIndex::pack_cell(SpatialBinIndex::cell_coord(p.x, cell),
                                      SpatialBinIndex::cell_coord(p.y, cell),
                                      SpatialBinIndex::cell_coord(p.z, cell));
  };
  for (int i = 0; i < n; i++) grid[cell_of(candidates[i].position)].push_back(i);

  auto for_neighbors = [&](int i, auto&& fn) {
    auto p = candidates[i].position;
    auto cx = SpatialBinIndex::cell_coord(p.x, cell);
    auto cy = SpatialBinIndex::cell_coord(p.y, cell);
    auto cz = SpatialBinIndex::cell_coord(p.z, cell);
    for (int64_t dx = -1; dx <= 1; dx++)
      for (int64_t dy = -1; dy <= 1; dy++)
        for (int64_t dz = -1; dz <= 1; dz++) {
          auto it = grid.find(SpatialBinIndex::pack_cell(cx + dx, cy + dy, cz + dz));
          if (it == grid.end()) continue;
          for (auto other : it->second) {
            if (other == i) continue;
            auto d = distance(p, candidates[other].position);
            if (d < 2 * r_max) fn(other, d);
          }
        }
  };

  auto weight_term = [&](double d) {
    auto x = 1.0 - d / (2 * r_max);
    return std::pow(std::max(x, 0.0), 8);
  };

  std::vector<double> weight(n, 0.0);
  for (int i = 0; i < n; i++)
    for_neighbors(i, [&](int, double d) { weight[i] += weight_term(d); });

  // Max-heap of (weight, id) with lazy updates.
  std::vector<char> alive(n, 1);
  using Entry = std::pair<double, int>;
  std::priority_queue<Entry> heap;
  for (int i = 0; i < n; i++) heap.push({weight[i], i});
  int remaining = n;
  while (remaining > target_count && !heap.empty()) {
    auto [w, i] = heap.top();
    heap.pop();
    if (!alive[i] || w != weight[i]) continue;  // stale entry
    alive[i] = 0;
    remaining--;
    for_neighbors(i, [&](int other, double d) {
      if (!alive[other]) return;
      weight[other] -= weight_term(d);
      heap.push({weight[other], other});
    });
  }

  for (int i = 0; i < n; i++)
    if (alive[i])
      out.samples.push_back({candidates[i], mesh.face_frames[candidates[i].face]});
  return out;
}

std::optional<FeaturePatch> extract_patch(const TriangleMesh& mesh, const Bvh& bvh,
                                          const TextureField& field, Vec3 center,
                                          const Mat3& frame, const ExtractParams& params) {
  auto r = params.resolution;
  FeaturePatch patch;
  patch.resolution = r;
  patch.f_channels = field.f_dim();
  patch.channels = field.f_dim() + field.fhat_dim();
  patch.world_size = params.world_size;
  patch.t_s = frame;
  patch.features.assign(size_t(r) * r * patch.channels, 0.f);
  patch.quats.assign(size_t(r) * r * 4, 0.f);
  patch.valid.assign(size_t(r) * r, 0);

  auto tangent = frame.col(0), bitangent = frame.col(1), normal = frame.col(2);
  auto lift = 0.75 * params.world_size;  // scan origin height above the plane
  auto t_max = 4.0 * params.world_size + lift;
  int misses = 0;
  double max_deviation = 0, sum_distance = 0;
  std::vector<double> f(field.f_dim()), f_hat(field.fhat_dim());

  for (int i = 0; i < r; i++)
    for (int j = 0; j < r; j++) {
      auto u = ((j + 0.5) / r - 0.5) * params.world_size;
      auto v = ((i + 0.5) / r - 0.5) * params.world_size;
      auto origin = center + u * tangent + v * bitangent + lift * normal;
      auto hit = raycast(bvh, mesh, origin, -normal, t_max, 0.0);
      if (!hit) {
        misses++;
        continue;
      }
      auto deviation = std::abs(hit->t - lift);
      max_deviation = std::max(max_deviation, deviation);
      sum_distance += deviation;

      auto point = mesh.face_point(hit->face, hit->barycentric);
      field.features_at(point, f, f_hat);
      auto dst = patch.features.data() + patch.texel(i, j) * patch.channels;
      for (int c = 0; c < patch.f_channels; c++) dst[c] = float(f[c]);
      for (size_t c = 0; c < f_hat.size(); c++)
        dst[patch.f_channels + c] = float(f_hat[c]);

      auto residual = quat_from_matrix(transpose(frame) * mesh.face_frames[hit->face]);
      auto q = patch.quats.data() + patch.texel(i, j) * 4;
      q[0] = float(residual.w);
      q[1] = float(residual.x);
      q[2] = float(residual.y);
      q[3] = float(residual.z);
      patch.valid[patch.texel(i, j)] = 1;
    }

  auto total = r * r;
  if (misses > params.max_miss_fraction * total) return std::nullopt;
  if (max_deviation > params.curvature_threshold * params.world_size) return std::nullopt;
  patch.mean_ray_distance = (total - misses) > 0 ? sum_distance / (total - misses) : 0.0;
  return patch;
}

FeaturePatch flip_patch(const FeaturePatch& patch, bool flip_u, bool flip_v) {
  if (!flip_u && !flip_v) return patch;
  FeaturePatch out = patch;
  out.flags = patch.flags ^ (flip_u ? 1u : 0u) ^ (flip_v ? 2u : 0u);
  auto r = patch.resolution;
  if (flip_u) out.t_s.col(0) = -out.t_s.col(0);
  if (flip_v) out.t_s.col(1) = -out.t_s.col(1);
  for (int i = 0; i < r; i++)
    for (int j = 0; j < r; j++) {
      auto si = flip_v ? r - 1 - i : i;
      auto sj = flip_u ? r - 1 - j : j;
      auto dst = out.texel(i, j);
      auto src = patch.texel(si, sj);
      std::copy_n(patch.features.data() + src * patch.channels, patch.channels,
                  out.features.data() + dst * patch.channels);
      out.valid[dst] = patch.valid[src];
      // Residual conjugated by the mirror: diag(-1,1,1) maps (w,x,y,z) to
      // (w,x,-y,-z); diag(1,-1,1) to (w,-x,y,-z). Exact, so double flips
      // restore the original bits.
      auto q = patch.quats.data() + src * 4;
      float w = q[0], x = q[1], y = q[2], z = q[3];
      if (flip_u) { y = -y; z = -z; }
      if (flip_v) { x = -x; z = -z; }
      auto dq = out.quats.data() + dst * 4;
      dq[0] = w; dq[1] = x; dq[2] = y; dq[3] = z;
    }
  return out;
}

std::array<FeaturePatch, 4> augment_flips(const FeaturePatch& patch) {
  return {patch, flip_patch(patch, true, false), flip_patch(patch, false, true),
          flip_patch(patch, true, true)};
}

Quat PatchLibrary::entry_quat(uint32_t entry, int i, int j) const {
  auto& src = source_of(entry);
  remap(entry, i, j);
  auto q = src.quats.data() + src.texel(i, j) * 4;
  Quat out{q[0], q[1], q[2], q[3]};
  if (entry & 1u) { out.y = -out.y; out.z = -out.z; }
  if (entry & 2u) { out.x = -out.x; out.z = -out.z; }
  return out;
}

FeaturePatch PatchLibrary::materialize(uint32_t entry) const {
  return flip_patch(sources[entry >> 2], entry & 1u, entry & 2u);
}

PatchLibrary build_patch_library(const TriangleMesh& mesh, const Bvh& bvh,
                                 const TextureField& field, int target_count,
                                 const ExtractParams& params, Rng& rng,
                                 ExtractStats* stats) {
  auto poisson = poisson_disk_sample(mesh, target_count, rng);
  auto extract_params = params;
  if (extract_params.world_size <= 0) extract_params.world_size = 8.0 * poisson.radius;

  PatchLibrary lib;
  lib.resolution = extract_params.resolution;
  lib.f_channels = field.f_dim();
  lib.channels = field.f_dim() + field.fhat_dim();
  lib.world_size = extract_params.world_size;

  std::vector<std::optional<FeaturePatch>> results(poisson.samples.size());
  parallel_for(0, int64_t(poisson.samples.size()), [&](int64_t i, int) {
    auto& s = poisson.samples[size_t(i)];
    results[size_t(i)] =
        extract_patch(mesh, bvh, field, s.point.position, s.frame, extract_params);
  });

  ExtractStats local;
  local.attempted = int(poisson.samples.size());
  for (auto& r : results) {
    if (r) {
      lib.sources.push_back(std::move(*r));
      local.accepted++;
    }
  }
  local.rejected_curvature = local.attempted - local.accepted;  // merged counter
  if (stats) *stats = local;
  return lib;
}

static constexpr char kLibMagic[8] = {'N', 'R', 'T', 'X', 'L', 'I', 'B', 0};

void save_patch_library(const PatchLibrary& lib, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write patch library: " + path);
  out.write(kLibMagic, 8);
  uint32_t header[6] = {1u, uint32_t(lib.sources.size()), uint32_t(lib.resolution),
                        uint32_t(lib.channels), uint32_t(lib.f_channels), 0u};
  out.write(reinterpret_cast<const char*>(header), sizeof(header));
  double ws = lib.world_size;
  out.write(reinterpret_cast<const char*>(&ws), sizeof(ws));
  for (auto& p : lib.sources) {
    out.write(reinterpret_cast<const char*>(p.features.data()),
              std::streamsize(p.features.size() * 4));
    out.write(reinterpret_cast<const char*>(p.quats.data()),
              std::streamsize(p.quats.size() * 4));
    out.write(reinterpret_cast<const char*>(p.valid.data()),
              std::streamsize(p.valid.size()));
    float ts[9];
    for (int c = 0; c < 3; c++)
      for (int row = 0; row < 3; row++) ts[c * 3 + row] = float(p.t_s(row, c));
    out.write(reinterpret_cast<const char*>(ts), sizeof(ts));
    uint32_t flags = p.flags;
    out.write(reinterpret_cast<const char*>(&flags), 4);
    float mean = float(p.mean_ray_distance);
    out.write(reinterpret_cast<const char*>(&mean), 4);
  }
  if (!out) throw std::runtime_error("short write: " + path);
}

PatchLibrary load_patch_library(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open patch library: " + path);
  char magic[8];
  in.read(magic, 8);
  if (!in || std::memcmp(magic, kLibMagic, 8) != 0)
    throw std::runtime_error("not a patch library: " + path);
  uint32_t header[6];
  in.read(reinterpret_cast<char*>(header), sizeof(header));
  if (header[0] != 1u) throw std::runtime_error("unsupported library version: " + path);
  PatchLibrary lib;
  lib.resolution = int(header[2]);
  lib.channels = int(header[3]);
  lib.f_channels = int(header[4]);
  in.read(reinterpret_cast<char*>(&lib.world_size), sizeof(double));
  lib.sources.resize(header[1]);
  auto r = lib.resolution;
  for (auto& p : lib.sources) {
    p.resolution = r;
    p.channels = lib.channels;
    p.f_channels = lib.f_channels;
    p.world_size = lib.world_size;
    p.features.resize(size_t(r) * r * lib.channels);
    p.quats.resize(size_t(r) * r * 4);
    p.valid.resize(size_t(r) * r);
    in.read(reinterpret_cast<char*>(p.features.data()),
            std::streamsize(p.features.size() * 4));
    in.read(reinterpret_cast<char*>(p.quats.data()), std::streamsize(p.quats.size() * 4));
    in.read(reinterpret_cast<char*>(p.valid.data()), std::streamsize(p.valid.size()));
    float ts[9];
    in.read(reinterpret_cast<char*>(ts), sizeof(ts));
    for (int c = 0; c < 3; c++)
      for (int row = 0; row < 3; row++) p.t_s(row, c) = ts[c * 3 + row];
    uint32_t flags;
    in.read(reinterpret_cast<char*>(&flags), 4);
    p.flags = flags;
    float mean;
    in.read(reinterpret_cast<char*>(&mean), 4);
    p.mean_ray_distance = mean;
    if (!in) throw std::runtime_error("truncated patch library: " + path);
  }
  return lib;
}

}  // namespace nrtx
