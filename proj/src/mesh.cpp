#include "nrtx/mesh.hpp"

#include <cstdio>
#include <fstream>
#include <map>
#include <sstream>
#include <stdexcept>

namespace nrtx {

Vec3 triangle_normal(Vec3 a, Vec3 b, Vec3 c) { return normalize(cross(b - a, c - a)); }

double triangle_area(Vec3 a, Vec3 b, Vec3 c) { return 0.5 * length(cross(b - a, c - a)); }

Bounds3 TriangleMesh::bounds() const {
  Bounds3 b;
  for (auto& v : vertices) b.expand(v);
  return b;
}

double TriangleMesh::mean_edge_length() const {
  double total = 0;
  int64_t count = 0;
  for (auto& f : faces) {
    total += distance(vertices[f[0]], vertices[f[1]]);
    total += distance(vertices[f[1]], vertices[f[2]]);
    total += distance(vertices[f[2]], vertices[f[0]]);
    count += 3;
  }
  return count ? total / count : 0;
}

double TriangleMesh::area() const {
  double total = 0;
  for (auto& f : faces)
    total += triangle_area(vertices[f[0]], vertices[f[1]], vertices[f[2]]);
  return total;
}

Vec3 TriangleMesh::face_point(int face, Vec3 bary) const {
  auto& f = faces[face];
  return bary.x * vertices[f[0]] + bary.y * vertices[f[1]] + bary.z * vertices[f[2]];
}

Vec2 TriangleMesh::face_uv(int face, Vec3 bary) const {
  auto& uv = face_uvs[face];
  return bary.x * uv[0] + bary.y * uv[1] + bary.z * uv[2];
}

void finalize_mesh(TriangleMesh& mesh) {
  for (auto& f : mesh.faces)
    for (auto idx : f)
      if (idx < 0 || idx >= mesh.vertex_count())
        throw std::invalid_argument("mesh: face index out of range");

  if (mesh.vertex_normals.size() != mesh.vertices.size()) {
    mesh.vertex_normals.assign(mesh.vertices.size(), Vec3{});
    for (auto& f : mesh.faces) {
      auto a = mesh.vertices[f[0]], b = mesh.vertices[f[1]], c = mesh.vertices[f[2]];
      auto weighted = cross(b - a, c - a);  // 2*area*normal
      mesh.vertex_normals[f[0]] += weighted;
      mesh.vertex_normals[f[1]] += weighted;
      mesh.vertex_normals[f[2]] += weighted;
    }
    for (auto& n : mesh.vertex_normals) {
      auto len = length(n);
      n = len > 0 ? n / len : Vec3{0, 0, 1};
    }
  } else {
    for (auto& n : mesh.vertex_normals) n = normalize(n);
  }

  // Frame columns (t, b, n): n is the geometric normal, t follows the first
  // edge. The tangent choice is arbitrary but must be deterministic; the
  // azimuth feature is trained relative to it.
  mesh.face_frames.resize(mesh.faces.size());
  for (size_t i = 0; i < mesh.faces.size(); i++) {
    auto& f = mesh.faces[i];
    auto a = mesh.vertices[f[0]], b = mesh.vertices[f[1]], c = mesh.vertices[f[2]];
    auto n = triangle_normal(a, b, c);
    auto t = b - a;
    t = t - dot(t, n) * n;
    auto tl = length(t);
    if (tl < 1e-12) {
      t = c - a;
      t = t - dot(t, n) * n;
      tl = length(t);
    }
    t = tl > 0 ? t / tl : Vec3{1, 0, 0};
    auto bt = cross(n, t);
    mesh.face_frames[i] = Mat3::from_columns(t, bt, n);
  }
}

TriangleMesh load_obj(const std::string& path) {
  std::ifstream file(path);
  if (!file) throw std::invalid_argument("cannot open mesh file: " + path);

  std::vector<Vec3> positions, normals;
  std::vector<Vec2> texcoords;
  struct Corner { int v = -1, vt = -1, vn = -1; };
  std::vector<std::array<Corner, 3>> face_corners;

  std::string line;
  int line_no = 0;
  auto fail = [&](const std::string& what) {
    throw std::invalid_argument(path + ":" + std::to_string(line_no) + ": " + what);
  };
  while (std::getline(file, line)) {
    line_no++;
    std::istringstream ss(line);
    std::string tag;
    if (!(ss >> tag) || tag.empty() || tag[0] == '#') continue;
    if (tag == "v") {
      Vec3 p;
      if (!(ss >> p.x >> p.y >> p.z)) fail("malformed vertex");
      positions.push_back(p);
    } else if (tag == "vn") {
      Vec3 n;
      if (!(ss >> n.x >> n.y >> n.z)) fail("malformed normal");
      normals.push_back(n);
    } else if (tag == "vt") {
      Vec2 t;
      if (!(ss >> t.x >> t.y)) fail("malformed texcoord");
      texcoords.push_back(t);
    } else if (tag == "f") {
      std::vector<Corner> corners;
      std::string word;
      while (ss >> word) {
        Corner c;
        int fields[3] = {0, 0, 0};
        int field = 0;
        size_t pos = 0;
        while (pos < word.size() && field < 3) {
          if (word[pos] == '/') {
            field++;
            pos++;
            continue;
          }
          auto start = pos;
          while (pos < word.size() && word[pos] != '/') pos++;
          try {
            fields[field] = std::stoi(word.substr(start, pos - start));
          } catch (...) {
            fail("malformed face corner '" + word + "'");
          }
        }
        if (fields[0] <= 0) fail("face indices must be positive 1-based");
        c.v = fields[0] - 1;
        c.vt = fields[1] - 1;
        c.vn = fields[2] - 1;
        corners.push_back(c);
      }
      if (corners.size() != 3) fail("only triangular faces are supported");
      face_corners.push_back({corners[0], corners[1], corners[2]});
    }
    // Unknown tags (o, g, s, usemtl, ...) are ignored.
  }

  TriangleMesh mesh;
  mesh.vertices = positions;
  bool any_vn = false, all_vt = !face_corners.empty();
  for (auto& fc : face_corners) {
    std::array<int, 3> tri{};
    for (int k = 0; k < 3; k++) {
      if (fc[k].v >= static_cast<int>(positions.size()))
        throw std::invalid_argument(path + ": face vertex index out of range");
      tri[k] = fc[k].v;
      if (fc[k].vn >= 0) any_vn = true;
      if (fc[k].vt < 0) all_vt = false;
    }
    mesh.faces.push_back(tri);
  }

  if (any_vn && !normals.empty()) {
    // Average the referenced corner normals per vertex.
    mesh.vertex_normals.assign(positions.size(), Vec3{});
    for (auto& fc : face_corners)
      for (int k = 0; k < 3; k++)
        if (fc[k].vn >= 0) {
          if (fc[k].vn >= static_cast<int>(normals.size()))
            throw std::invalid_argument(path + ": face normal index out of range");
          mesh.vertex_normals[fc[k].v] += normals[fc[k].vn];
        }
    bool any_zero = false;
    for (auto& n : mesh.vertex_normals)
      if (length(n) < 1e-12) any_zero = true;
    if (any_zero) mesh.vertex_normals.clear();  // fall back to area-weighted
  }

  if (all_vt && !texcoords.empty()) {
    mesh.face_uvs.resize(face_corners.size());
    for (size_t i = 0; i < face_corners.size(); i++)
      for (int k = 0; k < 3; k++) {
        auto vt = face_corners[i][k].vt;
        if (vt >= static_cast<int>(texcoords.size()))
          throw std::invalid_argument(path + ": face texcoord index out of range");
        mesh.face_uvs[i][k] = texcoords[vt];
      }
  }

  if (mesh.faces.empty()) throw std::invalid_argument(path + ": mesh has no faces");
  finalize_mesh(mesh);
  return mesh;
}

void save_obj(const TriangleMesh& mesh, const std::string& path) {
  std::ofstream file(path);
  if (!file) throw std::runtime_error("cannot write mesh file: " + path);
  char buf[256];
  for (auto& v : mesh.vertices) {
    std::snprintf(buf, sizeof(buf), "v %.9g %.9g %.9g\n", v.x, v.y, v.z);
    file << buf;
  }
  for (auto& n : mesh.vertex_normals) {
    std::snprintf(buf, sizeof(buf), "vn %.9g %.9g %.9g\n", n.x, n.y, n.z);
    file << buf;
  }
  if (mesh.has_uvs()) {
    for (auto& uv : mesh.face_uvs)
      for (auto& t : uv) {
        std::snprintf(buf, sizeof(buf), "vt %.9g %.9g\n", t.x, t.y);
        file << buf;
      }
    for (size_t i = 0; i < mesh.faces.size(); i++) {
      auto& f = mesh.faces[i];
      file << "f";
      for (int k = 0; k < 3; k++) {
        std::snprintf(buf, sizeof(buf), " %d/%zu/%d", f[k] + 1, i * 3 + k + 1, f[k] + 1);
        file << buf;
      }
      file << "\n";
    }
  } else {
    for (auto& f : mesh.faces)
      file << "f " << f[0] + 1 << "//" << f[0] + 1 << " " << f[1] + 1 << "//" << f[1] + 1
           << " " << f[2] + 1 << "//" << f[2] + 1 << "\n";
  }
}

std::vector<SurfacePoint> sample_surface_points(const TriangleMesh& mesh, int count,
                                                Rng& rng) {
  std::vector<double> cdf(mesh.face_count());
  double total = 0;
  for (int i = 0; i < mesh.face_count(); i++) {
    auto& f = mesh.faces[i];
    total += triangle_area(mesh.vertices[f[0]], mesh.vertices[f[1]], mesh.vertices[f[2]]);
    cdf[i] = total;
  }
  std::vector<SurfacePoint> points;
  points.reserve(count);
  for (int i = 0; i < count; i++) {
    auto r = rng.uniform() * total;
    auto it = std::lower_bound(cdf.begin(), cdf.end(), r);
    auto face = int(it - cdf.begin());
    if (face >= mesh.face_count()) face = mesh.face_count() - 1;
    auto u = rng.uniform(), v = rng.uniform();
    if (u + v > 1) { u = 1 - u; v = 1 - v; }
    Vec3 bary = {1 - u - v, u, v};
    points.push_back({mesh.face_point(face, bary), face, bary});
  }
  return points;
}

TriangleMesh make_plane_mesh(int n, double half) {
  TriangleMesh mesh;
  for (int i = 0; i < n; i++)
    for (int j = 0; j < n; j++) {
      auto u = n > 1 ? double(j) / (n - 1) : 0.5;
      auto v = n > 1 ? double(i) / (n - 1) : 0.5;
      mesh.vertices.push_back({-half + 2 * half * u, -half + 2 * half * v, 0});
    }
  mesh.face_uvs.reserve(2 * (n - 1) * (n - 1));
  auto vid = [n](int i, int j) { return i * n + j; };
  auto uv = [n](int i, int j) { return Vec2{double(j) / (n - 1), double(i) / (n - 1)}; };
  for (int i = 0; i + 1 < n; i++)
    for (int j = 0; j + 1 < n; j++) {
      mesh.faces.push_back({vid(i, j), vid(i, j + 1), vid(i + 1, j + 1)});
      mesh.face_uvs.push_back({uv(i, j), uv(i, j + 1), uv(i + 1, j + 1)});
      mesh.faces.push_back({vid(i, j), vid(i + 1, j + 1), vid(i + 1, j)});
      mesh.face_uvs.push_back({uv(i, j), uv(i + 1, j + 1), uv(i + 1, j)});
    }
  finalize_mesh(mesh);
  return mesh;
}

TriangleMesh make_sphere_mesh(int subdivisions, double radius) {
  // Icosahedron base.
  auto t = (1.0 + std::sqrt(5.0)) / 2.0;
  std::vector<Vec3> verts = {
      {-1, t, 0}, {1, t, 0}, {-1, -t, 0}, {1, -t, 0}, {0, -1, t},  {0, 1, t},
      {0, -1, -t}, {0, 1, -t}, {t, 0, -1}, {t, 0, 1}, {-t, 0, -1}, {-t, 0, 1}};
  for (auto& v : verts) v = normalize(v);
  std::vector<std::array<int, 3>> faces = {
      {0, 11, 5}, {0, 5, 1},  {0, 1, 7},   {0, 7, 10}, {0, 10, 11}, {1, 5, 9},
      {5, 11, 4}, {11, 10, 2}, {10, 7, 6}, {7, 1, 8},  {3, 9, 4},   {3, 4, 2},
      {3, 2, 6},  {3, 6, 8},  {3, 8, 9},  {4, 9, 5},  {2, 4, 11},  {6, 2, 10},
      {8, 6, 7},  {9, 8, 1}};

  for (int s = 0; s < subdivisions; s++) {
    std::map<std::pair<int, int>, int> midpoint;
    auto mid = [&](int a, int b) {
      auto key = std::minmax(a, b);
      auto it = midpoint.find(key);
      if (it != midpoint.end()) return it->second;
      verts.push_back(normalize(0.5 * (verts[a] + verts[b])));
      int id = static_cast<int>(verts.size()) - 1;
      midpoint[key] = id;
      return id;
    };
    std::vector<std::array<int, 3>> next;
    next.reserve(faces.size() * 4);
    for (auto& f : faces) {
      auto a = mid(f[0], f[1]), b = mid(f[1], f[2]), c = mid(f[2], f[0]);
      next.push_back({f[0], a, c});
      next.push_back({f[1], b, a});
      next.push_back({f[2], c, b});
      next.push_back({a, b, c});
    }
    faces = std::move(next);
  }

  TriangleMesh mesh;
  mesh.vertices.reserve(verts.size());
  mesh.vertex_normals.reserve(verts.size());
  for (auto& v : verts) {
    mesh.vertices.push_back(radius * v);
    mesh.vertex_normals.push_back(v);
  }
  mesh.faces = faces;
  // Cube-projection atlas: six charts in a 3x2 grid, one per dominant face
  // normal axis. Chart interiors are inset to leave gutters between charts.
  mesh.face_uvs.resize(faces.size());
  for (size_t i = 0; i < faces.size(); i++) {
    auto& f = faces[i];
    auto n = triangle_normal(mesh.vertices[f[0]], mesh.vertices[f[1]], mesh.vertices[f[2]]);
    int axis = 0;
    for (int a = 1; a < 3; a++)
      if (std::abs(n[a]) > std::abs(n[axis])) axis = a;
    int chart = axis * 2 + (n[axis] < 0 ? 1 : 0);
    int cu = chart % 3, cv = chart / 3;
    int ua = (axis + 1) % 3, va = (axis + 2) % 3;
    for (int k = 0; k < 3; k++) {
      auto p = normalize(mesh.vertices[f[k]]);
      // Gnomonic projection onto the cube face, then into the chart cell.
      auto s = p[ua] / std::max(std::abs(p[axis]), 1e-9);
      auto t2 = p[va] / std::max(std::abs(p[axis]), 1e-9);
      if (n[axis] < 0) s = -s;
      auto inset = 0.04;
      auto u = (cu + 0.5 + (0.5 - inset) * std::clamp(s, -1.0, 1.0)) / 3.0;
      auto v = (cv + 0.5 + (0.5 - inset) * std::clamp(t2, -1.0, 1.0)) / 2.0;
      mesh.face_uvs[i][k] = {u, v};
    }
  }
  finalize_mesh(mesh);
  return mesh;
}

}  // namespace nrtx
