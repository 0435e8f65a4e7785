#pragma once

#include <optional>

#include "nrtx/spatial.hpp"

namespace nrtx {

// Result of mapping a query point onto the base shape.
struct Projection {
  Vec3 footpoint;     // x_c on the base surface
  double s = 0;       // signed distance along n_c; positive on the n_c side
  Vec3 coarse_normal; // n_c at the query point, unit
  int face = -1;
  Vec3 barycentric;
};

struct CoarseNormalResult {
  Vec3 normal;
  bool degenerate = false;  // fell back to the nearest vertex normal
};

// Inverse-distance weighted vertex-normal blend with a pull toward the
// query direction; the 1/w term keeps the projection ray hitting the mesh
// when x is far from the surface.
CoarseNormalResult coarse_normal(const TriangleMesh& mesh, const SpatialBinIndex& index,
                                 Vec3 x, int k = 8, double w = 0.01);

// Ray-cast projection along a fixed direction. Kept separate from the
// normal estimate so callers (and the backward rule) can treat the
// direction as a constant.
std::optional<Projection> project_along(const TriangleMesh& mesh, const Bvh& bvh, Vec3 x,
                                        Vec3 n_c, double t_max);

// Full projection: coarse normal, then the ray along -n_c with a +n_c
// fallback. Empty when both rays miss (open meshes); callers treat such
// points as zero density.
std::optional<Projection> project_to_base(const TriangleMesh& mesh, const Bvh& bvh,
                                          const SpatialBinIndex& index, Vec3 x,
                                          int k = 8, double w = 0.01);

// The defined backward rule of the projection layer: the footpoint passes
// through the tangential component, the signed distance the normal one.
// Applied verbatim regardless of curvature; n_c carries no gradient.
struct ProjectionJacobian {
  Mat3 d_footpoint;  // I - n_c n_c^T
  Vec3 d_s;          // n_c
};

ProjectionJacobian projection_jacobian(const Projection& p);

}  // namespace nrtx
