#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <limits>

namespace nrtx {

struct Vec2 {
  double x = 0, y = 0;

  double& operator[](int i) { return (&x)[i]; }
  double operator[](int i) const { return (&x)[i]; }
};

struct Vec3 {
  double x = 0, y = 0, z = 0;

  double& operator[](int i) { return (&x)[i]; }
  double operator[](int i) const { return (&x)[i]; }
};

inline Vec2 operator+(Vec2 a, Vec2 b) { return {a.x + b.x, a.y + b.y}; }
inline Vec2 operator-(Vec2 a, Vec2 b) { return {a.x - b.x, a.y - b.y}; }
inline Vec2 operator*(double s, Vec2 a) { return {s * a.x, s * a.y}; }
inline Vec2 operator*(Vec2 a, double s) { return s * a; }
inline double dot(Vec2 a, Vec2 b) { return a.x * b.x + a.y * b.y; }
inline double length(Vec2 a) { return std::sqrt(dot(a, a)); }

inline Vec3 operator+(Vec3 a, Vec3 b) { return {a.x + b.x, a.y + b.y, a.z + b.z}; }
inline Vec3 operator-(Vec3 a, Vec3 b) { return {a.x - b.x, a.y - b.y, a.z - b.z}; }
inline Vec3 operator-(Vec3 a) { return {-a.x, -a.y, -a.z}; }
inline Vec3 operator*(double s, Vec3 a) { return {s * a.x, s * a.y, s * a.z}; }
inline Vec3 operator*(Vec3 a, double s) { return s * a; }
inline Vec3 operator/(Vec3 a, double s) { return {a.x / s, a.y / s, a.z / s}; }
inline Vec3& operator+=(Vec3& a, Vec3 b) { a = a + b; return a; }
inline Vec3& operator-=(Vec3& a, Vec3 b) { a = a - b; return a; }
inline Vec3& operator*=(Vec3& a, double s) { a = a * s; return a; }
inline Vec3 operator*(Vec3 a, Vec3 b) { return {a.x * b.x, a.y * b.y, a.z * b.z}; }

inline double dot(Vec3 a, Vec3 b) { return a.x * b.x + a.y * b.y + a.z * b.z; }
inline Vec3 cross(Vec3 a, Vec3 b) {
  return {a.y * b.z - a.z * b.y, a.z * b.x - a.x * b.z, a.x * b.y - a.y * b.x};
}
inline double length_squared(Vec3 a) { return dot(a, a); }
inline double length(Vec3 a) { return std::sqrt(dot(a, a)); }
inline Vec3 normalize(Vec3 a) {
  auto len = length(a);
  return len > 0 ? a / len : a;
}
inline double distance(Vec3 a, Vec3 b) { return length(a - b); }
inline Vec3 min(Vec3 a, Vec3 b) {
  return {std::min(a.x, b.x), std::min(a.y, b.y), std::min(a.z, b.z)};
}
inline Vec3 max(Vec3 a, Vec3 b) {
  return {std::max(a.x, b.x), std::max(a.y, b.y), std::max(a.z, b.z)};
}
inline Vec3 clamp(Vec3 v, double lo, double hi) {
  return {std::clamp(v.x, lo, hi), std::clamp(v.y, lo, hi), std::clamp(v.z, lo, hi)};
}
inline Vec3 lerp(Vec3 a, Vec3 b, double t) { return (1 - t) * a + t * b; }
inline bool isfinite(Vec3 a) {
  return std::isfinite(a.x) && std::isfinite(a.y) && std::isfinite(a.z);
}
// Mirror direction: d reflected about the plane with unit normal n.
inline Vec3 reflect(Vec3 d, Vec3 n) { return d - 2 * dot(d, n) * n; }

// Column-major 3x3 matrix; col(0..2) are the basis vectors.
struct Mat3 {
  std::array<Vec3, 3> cols = {Vec3{1, 0, 0}, Vec3{0, 1, 0}, Vec3{0, 0, 1}};

  static Mat3 identity() { return {}; }
  static Mat3 from_columns(Vec3 c0, Vec3 c1, Vec3 c2) { return {{c0, c1, c2}}; }

  Vec3& col(int i) { return cols[i]; }
  Vec3 col(int i) const { return cols[i]; }
  double operator()(int row, int col_) const { return cols[col_][row]; }
  double& operator()(int row, int col_) { return cols[col_][row]; }
};

inline Vec3 operator*(const Mat3& m, Vec3 v) {
  return v.x * m.col(0) + v.y * m.col(1) + v.z * m.col(2);
}
inline Mat3 operator*(const Mat3& a, const Mat3& b) {
  return Mat3::from_columns(a * b.col(0), a * b.col(1), a * b.col(2));
}
inline Mat3 transpose(const Mat3& m) {
  Mat3 t;
  for (auto r = 0; r < 3; r++)
    for (auto c = 0; c < 3; c++) t(r, c) = m(c, r);
  return t;
}
inline double determinant(const Mat3& m) {
  return dot(m.col(0), cross(m.col(1), m.col(2)));
}
// Outer product a b^T.
inline Mat3 outer(Vec3 a, Vec3 b) {
  return Mat3::from_columns(b.x * a, b.y * a, b.z * a);
}
inline Mat3 operator-(const Mat3& a, const Mat3& b) {
  return Mat3::from_columns(a.col(0) - b.col(0), a.col(1) - b.col(1), a.col(2) - b.col(2));
}

// Unit quaternion for rotations, (w, x, y, z).
struct Quat {
  double w = 1, x = 0, y = 0, z = 0;
};

inline Quat normalize(Quat q) {
  auto n = std::sqrt(q.w * q.w + q.x * q.x + q.y * q.y + q.z * q.z);
  return n > 0 ? Quat{q.w / n, q.x / n, q.y / n, q.z / n} : Quat{};
}
inline double quat_norm(Quat q) {
  return std::sqrt(q.w * q.w + q.x * q.x + q.y * q.y + q.z * q.z);
}
inline Vec3 rotate(Quat q, Vec3 v) {
  Vec3 u = {q.x, q.y, q.z};
  return 2 * dot(u, v) * u + (q.w * q.w - dot(u, u)) * v + 2 * q.w * cross(u, v);
}

// Rotation matrix -> quaternion (Shepperd's method). m must be a proper rotation.
inline Quat quat_from_matrix(const Mat3& m) {
  Quat q;
  auto trace = m(0, 0) + m(1, 1) + m(2, 2);
  if (trace > 0) {
    auto s = std::sqrt(trace + 1.0) * 2;
    q.w = 0.25 * s;
    q.x = (m(2, 1) - m(1, 2)) / s;
    q.y = (m(0, 2) - m(2, 0)) / s;
    q.z = (m(1, 0) - m(0, 1)) / s;
  } else if (m(0, 0) > m(1, 1) && m(0, 0) > m(2, 2)) {
    auto s = std::sqrt(1.0 + m(0, 0) - m(1, 1) - m(2, 2)) * 2;
    q.w = (m(2, 1) - m(1, 2)) / s;
    q.x = 0.25 * s;
    q.y = (m(0, 1) + m(1, 0)) / s;
    q.z = (m(0, 2) + m(2, 0)) / s;
  } else if (m(1, 1) > m(2, 2)) {
    auto s = std::sqrt(1.0 + m(1, 1) - m(0, 0) - m(2, 2)) * 2;
    q.w = (m(0, 2) - m(2, 0)) / s;
    q.x = (m(0, 1) + m(1, 0)) / s;
    q.y = 0.25 * s;
    q.z = (m(1, 2) + m(2, 1)) / s;
  } else {
    auto s = std::sqrt(1.0 + m(2, 2) - m(0, 0) - m(1, 1)) * 2;
    q.w = (m(1, 0) - m(0, 1)) / s;
    q.x = (m(0, 2) + m(2, 0)) / s;
    q.y = (m(1, 2) + m(2, 1)) / s;
    q.z = 0.25 * s;
  }
  return normalize(q);
}

inline Mat3 matrix_from_quat(Quat q) {
  auto xx = q.x * q.x, yy = q.y * q.y, zz = q.z * q.z;
  auto xy = q.x * q.y, xz = q.x * q.z, yz = q.y * q.z;
  auto wx = q.w * q.x, wy = q.w * q.y, wz = q.w * q.z;
  Mat3 m;
  m(0, 0) = 1 - 2 * (yy + zz); m(0, 1) = 2 * (xy - wz);     m(0, 2) = 2 * (xz + wy);
  m(1, 0) = 2 * (xy + wz);     m(1, 1) = 1 - 2 * (xx + zz); m(1, 2) = 2 * (yz - wx);
  m(2, 0) = 2 * (xz - wy);     m(2, 1) = 2 * (yz + wx);     m(2, 2) = 1 - 2 * (xx + yy);
  return m;
}

struct Bounds3 {
  Vec3 lo = {std::numeric_limits<double>::max(), std::numeric_limits<double>::max(),
             std::numeric_limits<double>::max()};
  Vec3 hi = {std::numeric_limits<double>::lowest(), std::numeric_limits<double>::lowest(),
             std::numeric_limits<double>::lowest()};

  void expand(Vec3 p) { lo = min(lo, p); hi = max(hi, p); }
  void expand(const Bounds3& b) { lo = min(lo, b.lo); hi = max(hi, b.hi); }
  Vec3 extent() const { return hi - lo; }
  Vec3 center() const { return 0.5 * (lo + hi); }
  double diagonal() const { return length(extent()); }
  bool valid() const { return lo.x <= hi.x && lo.y <= hi.y && lo.z <= hi.z; }
  Bounds3 dilated(double pad) const {
    return {lo - Vec3{pad, pad, pad}, hi + Vec3{pad, pad, pad}};
  }
};

// Slab test; returns entry/exit parameters if the ray segment [t_lo, t_hi] hits.
inline bool intersect_bounds(const Bounds3& b, Vec3 origin, Vec3 inv_dir, double t_lo,
                             double t_hi, double* t_enter = nullptr,
                             double* t_exit = nullptr) {
  for (auto axis = 0; axis < 3; axis++) {
    auto t0 = (b.lo[axis] - origin[axis]) * inv_dir[axis];
    auto t1 = (b.hi[axis] - origin[axis]) * inv_dir[axis];
    if (t0 > t1) std::swap(t0, t1);
    t_lo = std::max(t_lo, t0);
    t_hi = std::min(t_hi, t1);
    if (t_lo > t_hi) return false;
  }
  if (t_enter) *t_enter = t_lo;
  if (t_exit) *t_exit = t_hi;
  return true;
}

constexpr double kPi = 3.14159265358979323846;

inline double smoothstep01(double u) {
  u = std::clamp(u, 0.0, 1.0);
  return u * u * (3 - 2 * u);
}

}  // namespace nrtx
