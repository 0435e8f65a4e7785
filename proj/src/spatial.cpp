#include "nrtx/spatial.hpp"

#include <algorithm>
#include <numeric>
#include <stdexcept>

namespace nrtx {

SpatialBinIndex build_spatial_bins(const TriangleMesh& mesh, double cell_size) {
  if (cell_size <= 0) throw std::invalid_argument("cell_size must be positive");
  if (mesh.vertices.empty()) throw std::invalid_argument("mesh is empty");
  SpatialBinIndex index;
  index.cell_size = cell_size;
  index.vertex_count = mesh.vertex_count();
  for (int i = 0; i < mesh.vertex_count(); i++) {
    auto& v = mesh.vertices[i];
    auto key = SpatialBinIndex::pack_cell(SpatialBinIndex::cell_coord(v.x, cell_size),
                                          SpatialBinIndex::cell_coord(v.y, cell_size),
                                          SpatialBinIndex::cell_coord(v.z, cell_size));
    index.bins[key].push_back(i);
  }
  return index;
}

KnnResult knn_query(const SpatialBinIndex& index, const TriangleMesh& mesh, Vec3 x,
                    int k) {
  if (k < 1) throw std::invalid_argument("k must be >= 1");
  KnnResult result;
  if (k > index.vertex_count) {
    result.truncated = true;
    k = index.vertex_count;
  }

  auto cell = index.cell_size;
  int64_t cx = SpatialBinIndex::cell_coord(x.x, cell);
  int64_t cy = SpatialBinIndex::cell_coord(x.y, cell);
  int64_t cz = SpatialBinIndex::cell_coord(x.z, cell);

  // (squared distance, id) heap of the best K so far.
  std::vector<std::pair<double, int>> best;
  auto worse = [](const std::pair<double, int>& a, const std::pair<double, int>& b) {
    return a.first < b.first || (a.first == b.first && a.second < b.second);
  };
  auto consider = [&](int vid) {
    auto d2 = length_squared(mesh.vertices[vid] - x);
    std::pair<double, int> cand{d2, vid};
    if (static_cast<int>(best.size()) < k) {
      best.push_back(cand);
      std::push_heap(best.begin(), best.end(), worse);
    } else if (worse(cand, best.front())) {
      std::pop_heap(best.begin(), best.end(), worse);
      best.back() = cand;
      std::push_heap(best.begin(), best.end(), worse);
    }
  };

  for (int64_t ring = 0;; ring++) {
    // Any point in a ring-r cell lies at distance >= (r-1)*cell from x.
    if (static_cast<int>(best.size()) == k) {
      auto lower = (double(ring) - 1.0) * cell;
      if (lower > 0 && lower * lower > best.front().first) break;
    }
    bool any_cell = false;
    for (int64_t dx = -ring; dx <= ring; dx++)
      for (int64_t dy = -ring; dy <= ring; dy++)
        for (int64_t dz = -ring; dz <= ring; dz++) {
          if (std::max({std::abs(dx), std::abs(dy), std::abs(dz)}) != ring) continue;
          auto it = index.bins.find(SpatialBinIndex::pack_cell(cx + dx, cy + dy, cz + dz));
          if (it == index.bins.end()) continue;
          any_cell = true;
          for (auto vid : it->second) consider(vid);
        }
    (void)any_cell;
    if (ring > (1 << 20)) break;  // unreachable guard
  }

  std::sort(best.begin(), best.end(), worse);
  result.neighbors.reserve(best.size());
  for (auto& [d2, id] : best) result.neighbors.emplace_back(id, std::sqrt(d2));
  return result;
}

Bvh build_bvh(const TriangleMesh& mesh) {
  if (mesh.faces.empty()) throw std::invalid_argument("mesh is empty");
  Bvh bvh;
  auto n = mesh.face_count();
  bvh.order.resize(n);
  std::iota(bvh.order.begin(), bvh.order.end(), 0);

  std::vector<Vec3> centroids(n);
  std::vector<Bounds3> boxes(n);
  for (int i = 0; i < n; i++) {
    auto& f = mesh.faces[i];
    boxes[i].expand(mesh.vertices[f[0]]);
    boxes[i].expand(mesh.vertices[f[1]]);
    boxes[i].expand(mesh.vertices[f[2]]);
    centroids[i] = (mesh.vertices[f[0]] + mesh.vertices[f[1]] + mesh.vertices[f[2]]) / 3.0;
  }

  constexpr int kLeafSize = 4;
  constexpr int kMaxDepth = 64;

  struct Task { int node; int first; int count; int depth; };
  bvh.nodes.emplace_back();
  std::vector<Task> stack{{0, 0, n, 0}};
  while (!stack.empty()) {
    auto [node_id, first, count, depth] = stack.back();
    stack.pop_back();
    Bounds3 box;
    for (int i = first; i < first + count; i++) box.expand(boxes[bvh.order[i]]);
    bvh.nodes[node_id].box = box;

    if (count <= kLeafSize || depth >= kMaxDepth - 1) {
      bvh.nodes[node_id].first = first;
      bvh.nodes[node_id].count = count;
      continue;
    }
    Bounds3 cbox;
    for (int i = first; i < first + count; i++) cbox.expand(centroids[bvh.order[i]]);
    auto ext = cbox.extent();
    int axis = 0;
    if (ext.y > ext.x) axis = 1;
    if (ext.z > ext[axis]) axis = 2;
    auto mid = first + count / 2;
    std::nth_element(bvh.order.begin() + first, bvh.order.begin() + mid,
                     bvh.order.begin() + first + count, [&](int a, int b) {
                       auto ca = centroids[a][axis], cb = centroids[b][axis];
                       return ca < cb || (ca == cb && a < b);
                     });
    auto left = static_cast<int>(bvh.nodes.size());
    bvh.nodes.emplace_back();
    bvh.nodes.emplace_back();
    bvh.nodes[node_id].left = left;
    bvh.nodes[node_id].right = left + 1;
    stack.push_back({left, first, mid - first, depth + 1});
    stack.push_back({left + 1, mid, first + count - mid, depth + 1});
  }
  return bvh;
}

bool intersect_triangle(Vec3 origin, Vec3 dir, Vec3 a, Vec3 b, Vec3 c, double* t,
                        Vec3* bary) {
  auto e1 = b - a, e2 = c - a;
  auto pvec = cross(dir, e2);
  auto det = dot(e1, pvec);
  if (std::abs(det) < 1e-16) return false;
  auto inv_det = 1.0 / det;
  auto tvec = origin - a;
  auto u = dot(tvec, pvec) * inv_det;
  if (u < -1e-12 || u > 1 + 1e-12) return false;
  auto qvec = cross(tvec, e1);
  auto v = dot(dir, qvec) * inv_det;
  if (v < -1e-12 || u + v > 1 + 1e-12) return false;
  *t = dot(e2, qvec) * inv_det;
  *bary = {1 - u - v, u, v};
  return true;
}

static void raycast_leaf(const Bvh& bvh, const TriangleMesh& mesh, const Bvh::Node& node,
                         Vec3 origin, Vec3 dir, double t_min, double& t_best,
                         std::optional<RayHit>& hit) {
  for (int i = node.first; i < node.first + node.count; i++) {
    auto tri = bvh.order[i];
    auto& f = mesh.faces[tri];
    double t;
    Vec3 bary;
    if (intersect_triangle(origin, dir, mesh.vertices[f[0]], mesh.vertices[f[1]],
                           mesh.vertices[f[2]], &t, &bary) &&
        t > t_min && t <= t_best) {
      // Lower face id wins exact ties for determinism.
      if (t < t_best || !hit || tri < hit->face) {
        t_best = t;
        hit = RayHit{tri, t, bary};
      }
    }
  }
}

std::optional<RayHit> raycast(const Bvh& bvh, const TriangleMesh& mesh, Vec3 origin,
                              Vec3 dir, double t_max, double t_min) {
  std::optional<RayHit> hit;
  auto t_best = t_max;
  Vec3 inv_dir = {1.0 / dir.x, 1.0 / dir.y, 1.0 / dir.z};
  int stack[64];
  int top = 0;
  stack[top++] = 0;
  while (top > 0) {
    auto& node = bvh.nodes[stack[--top]];
    if (!intersect_bounds(node.box, origin, inv_dir, t_min, t_best)) continue;
    if (node.leaf()) {
      raycast_leaf(bvh, mesh, node, origin, dir, t_min, t_best, hit);
    } else {
      stack[top++] = node.left;
      stack[top++] = node.right;
    }
  }
  return hit;
}

std::optional<RayHit> raycast_brute_force(const TriangleMesh& mesh, Vec3 origin, Vec3 dir,
                                          double t_max, double t_min) {
  std::optional<RayHit> hit;
  auto t_best = t_max;
  for (int tri = 0; tri < mesh.face_count(); tri++) {
    auto& f = mesh.faces[tri];
    double t;
    Vec3 bary;
    if (intersect_triangle(origin, dir, mesh.vertices[f[0]], mesh.vertices[f[1]],
                           mesh.vertices[f[2]], &t, &bary) &&
        t > t_min && t <= t_best) {
      if (t < t_best || !hit || tri < hit->face) {
        t_best = t;
        hit = RayHit{tri, t, bary};
      }
    }
  }
  return hit;
}

std::vector<std::pair<double, double>> shell_intervals(const Bvh& bvh, Vec3 origin,
                                                       Vec3 dir, double pad,
                                                       double t_max) {
  std::vector<std::pair<double, double>> spans;
  Vec3 inv_dir = {1.0 / dir.x, 1.0 / dir.y, 1.0 / dir.z};
  int stack[64];
  int top = 0;
  stack[top++] = 0;
  while (top > 0) {
    auto& node = bvh.nodes[stack[--top]];
    double t0, t1;
    if (!intersect_bounds(node.box.dilated(pad), origin, inv_dir, 0.0, t_max, &t0, &t1))
      continue;
    if (node.leaf()) {
      spans.emplace_back(t0, t1);
    } else {
      stack[top++] = node.left;
      stack[top++] = node.right;
    }
  }
  std::sort(spans.begin(), spans.end());
  std::vector<std::pair<double, double>> merged;
  for (auto& s : spans) {
    if (!merged.empty() && s.first <= merged.back().second)
      merged.back().second = std::max(merged.back().second, s.second);
    else
      merged.push_back(s);
  }
  return merged;
}

}  // namespace nrtx
