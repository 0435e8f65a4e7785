#include "nrtx/projection.hpp"

namespace nrtx {

CoarseNormalResult coarse_normal(const TriangleMesh& mesh, const SpatialBinIndex& index,
                                 Vec3 x, int k, double w) {
  auto knn = knn_query(index, mesh, x, k);
  auto& nn = knn.neighbors;
  auto nearest = nn.front().first;
  auto r1 = nn.front().second;

  auto epsilon = 1e-9 * mesh.bounds().diagonal();
  if (r1 < epsilon) return {mesh.vertex_normals[nearest], true};

  auto pull = (x - mesh.vertices[nearest]) / (w * r1);
  Vec3 acc{};
  for (auto& [vid, dist] : nn) acc += mesh.vertex_normals[vid] / dist + pull;
  // The 1/W normalization drops out under the final normalize.
  auto len = length(acc);
  if (len < 1e-12) return {mesh.vertex_normals[nearest], true};
  return {acc / len, false};
}

std::optional<Projection> project_along(const TriangleMesh& mesh, const Bvh& bvh, Vec3 x,
                                        Vec3 n_c, double t_max) {
  // Nearest surface point along the n_c line. Interior points of closed
  // meshes must project to the near side behind the ray, not across the
  // volume, so both directions are tested and the smaller |t| wins.
  auto front = raycast(bvh, mesh, x, -n_c, t_max, -1e-18);
  auto back = raycast(bvh, mesh, x, n_c, t_max, 1e-18);
  const RayHit* hit = nullptr;
  double t = 0;  // signed ray parameter: x = footpoint + t * n_c
  if (front && (!back || front->t <= back->t)) {
    hit = &*front;
    t = front->t;
  } else if (back) {
    hit = &*back;
    t = -back->t;
  }
  if (!hit) return std::nullopt;

  Projection p;
  p.footpoint = mesh.face_point(hit->face, hit->barycentric);
  p.face = hit->face;
  p.barycentric = hit->barycentric;
  // Orient (n_c, s) to the hit face so s is an outward-signed distance.
  // Flipping both preserves x = footpoint + s * n_c exactly.
  if (dot(n_c, mesh.face_normal(hit->face)) < 0) {
    p.coarse_normal = -n_c;
    p.s = -t;
  } else {
    p.coarse_normal = n_c;
    p.s = t;
  }
  return p;
}

std::optional<Projection> project_to_base(const TriangleMesh& mesh, const Bvh& bvh,
                                          const SpatialBinIndex& index, Vec3 x, int k,
                                          double w) {
  auto n_c = coarse_normal(mesh, index, x, k, w).normal;
  auto t_max = 4.0 * mesh.bounds().diagonal() + 1e-9;
  return project_along(mesh, bvh, x, n_c, t_max);
}

ProjectionJacobian projection_jacobian(const Projection& p) {
  auto n = p.coarse_normal;
  return {Mat3::identity() - outer(n, n), n};
}

}  // namespace nrtx
