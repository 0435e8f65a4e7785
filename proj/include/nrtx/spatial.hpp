#pragma once

#include <optional>
#include <unordered_map>
#include <vector>

#include "nrtx/mesh.hpp"

namespace nrtx {

// Uniform grid over mesh vertices; cell of a vertex is floor(v / cell_size).
struct SpatialBinIndex {
  double cell_size = 0;
  std::unordered_map<uint64_t, std::vector<int>> bins;
  int vertex_count = 0;

  static int64_t cell_coord(double x, double cell) {
    return static_cast<int64_t>(std::floor(x / cell));
  }
  static uint64_t pack_cell(int64_t ix, int64_t iy, int64_t iz) {
    auto enc = [](int64_t v) { return static_cast<uint64_t>(v + (1ll << 20)) & 0x1fffff; };
    return (enc(ix) << 42) | (enc(iy) << 21) | enc(iz);
  }
};

struct KnnResult {
  std::vector<std::pair<int, double>> neighbors;  // (vertex id, distance), ascending
  bool truncated = false;                         // K exceeded the vertex count
};

SpatialBinIndex build_spatial_bins(const TriangleMesh& mesh, double cell_size);

// Exact K nearest vertices; ties broken toward the lower vertex id. The
// ring search stops once the ring lower bound exceeds the current K-th
// distance, so results match an exhaustive scan.
KnnResult knn_query(const SpatialBinIndex& index, const TriangleMesh& mesh, Vec3 x, int k);

// Median-split BVH over mesh triangles.
struct Bvh {
  struct Node {
    Bounds3 box;
    int left = -1, right = -1;   // internal links
    int first = 0, count = 0;    // leaf triangle range into `order`
    bool leaf() const { return count > 0; }
  };
  std::vector<Node> nodes;
  std::vector<int> order;  // permutation of triangle ids
};

Bvh build_bvh(const TriangleMesh& mesh);

struct RayHit {
  int face = -1;
  double t = 0;
  Vec3 barycentric;  // weights of the face corners, sum 1
};

// Nearest intersection with t in (t_min, t_max].
std::optional<RayHit> raycast(const Bvh& bvh, const TriangleMesh& mesh, Vec3 origin,
                              Vec3 dir, double t_max,
                              double t_min = 1e-7);

// Brute-force reference used by tests and as a fallback oracle.
std::optional<RayHit> raycast_brute_force(const TriangleMesh& mesh, Vec3 origin, Vec3 dir,
                                          double t_max, double t_min = 1e-7);

// Parameter intervals along the ray where it passes within `pad` of BVH leaf
// boxes, merged and sorted. Conservative superset of the |s| <= pad shell.
std::vector<std::pair<double, double>> shell_intervals(const Bvh& bvh, Vec3 origin,
                                                       Vec3 dir, double pad,
                                                       double t_max);

// Moller-Trumbore.
bool intersect_triangle(Vec3 origin, Vec3 dir, Vec3 a, Vec3 b, Vec3 c, double* t,
                        Vec3* bary);

}  // namespace nrtx
