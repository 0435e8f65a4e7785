#pragma once

#include <array>
#include <optional>
#include <string>
#include <vector>

#include "nrtx/math.hpp"
#include "nrtx/rng.hpp"

namespace nrtx {

// Indexed triangle surface. Per-face tangent frames are computed once at
// load and never mutated; everything downstream treats them as fixed.
struct TriangleMesh {
  std::vector<Vec3> vertices;
  std::vector<std::array<int, 3>> faces;
  std::vector<Vec3> vertex_normals;          // unit
  std::vector<Mat3> face_frames;             // columns (t, b, n), right-handed
  std::vector<std::array<Vec2, 3>> face_uvs; // per-corner, empty when absent

  bool has_uvs() const { return !face_uvs.empty(); }
  int vertex_count() const { return static_cast<int>(vertices.size()); }
  int face_count() const { return static_cast<int>(faces.size()); }

  Bounds3 bounds() const;
  double mean_edge_length() const;
  double area() const;
  Vec3 face_point(int face, Vec3 bary) const;
  Vec3 face_normal(int face) const { return face_frames[face].col(2); }
  // UV of a surface point given its face and barycentric weights.
  Vec2 face_uv(int face, Vec3 bary) const;
};

// Geometric normal of the face, area-weighted accumulation source.
Vec3 triangle_normal(Vec3 a, Vec3 b, Vec3 c);
double triangle_area(Vec3 a, Vec3 b, Vec3 c);

// Fills vertex_normals (area-weighted face average) when missing and
// computes the fixed per-face frames. Called by the loaders/builders.
void finalize_mesh(TriangleMesh& mesh);

// Wavefront OBJ subset: v, vn, vt, f with triangular faces only.
// Polygons or malformed records raise std::invalid_argument.
TriangleMesh load_obj(const std::string& path);
void save_obj(const TriangleMesh& mesh, const std::string& path);

struct SurfacePoint {
  Vec3 position;
  int face = -1;
  Vec3 barycentric;
};

// Area-weighted uniform random points on the surface.
std::vector<SurfacePoint> sample_surface_points(const TriangleMesh& mesh, int count,
                                                Rng& rng);

// Regular grid on z=0 spanning [-half, half]^2 with (n x n) vertices,
// UVs covering [0,1]^2.
TriangleMesh make_plane_mesh(int n, double half);
// Icosphere with the given subdivision count.
TriangleMesh make_sphere_mesh(int subdivisions, double radius);

}  // namespace nrtx
