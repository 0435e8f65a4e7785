#include "nrtx/sh.hpp"

#include <cmath>

namespace nrtx {

// Normalization constants of the real SH basis.
namespace {
constexpr double k00 = 0.28209479177387814;   // 1/(2 sqrt(pi))
constexpr double k1 = 0.4886025119029199;     // sqrt(3/(4pi))
constexpr double k2m2 = 1.0925484305920792;   // sqrt(15/(4pi))
constexpr double k20 = 0.31539156525252005;   // sqrt(5/(16pi))
constexpr double k22 = 0.5462742152960396;    // sqrt(15/(16pi))
constexpr double k3m3 = 0.5900435899266435;   // sqrt(35/(32pi))
constexpr double k3m2 = 2.890611442640554;    // sqrt(105/(4pi))
constexpr double k3m1 = 0.4570457994644658;   // sqrt(21/(32pi))
constexpr double k30 = 0.3731763325901154;    // sqrt(7/(16pi))
constexpr double k32 = 1.445305721320277;     // sqrt(105/(16pi))
constexpr double k4m4 = 2.5033429417967046;   // 3/4 sqrt(35/pi)
constexpr double k4m3 = 1.7701307697799304;   // 3/4 sqrt(35/(2pi))
constexpr double k4m2 = 0.9461746957575601;   // 3/4 sqrt(5/pi)
constexpr double k4m1 = 0.6690465435572892;   // 3/4 sqrt(5/(2pi))
constexpr double k40 = 0.10578554691520431;   // 3/(16 sqrt(pi))
constexpr double k42 = 0.47308734787878004;   // 3/8 sqrt(5/pi)
constexpr double k44 = 0.6258357354491761;    // 3/16 sqrt(35/pi)
}  // namespace

void sh_basis(Vec3 d, int order, std::span<double> out) {
  auto x = d.x, y = d.y, z = d.z;
  out[0] = k00;
  if (order < 1) return;
  out[1] = k1 * y;
  out[2] = k1 * z;
  out[3] = k1 * x;
  if (order < 2) return;
  out[4] = k2m2 * x * y;
  out[5] = k2m2 * y * z;
  out[6] = k20 * (3 * z * z - 1);
  out[7] = k2m2 * x * z;
  out[8] = k22 * (x * x - y * y);
  if (order < 3) return;
  out[9] = k3m3 * y * (3 * x * x - y * y);
  out[10] = k3m2 * x * y * z;
  out[11] = k3m1 * y * (5 * z * z - 1);
  out[12] = k30 * z * (5 * z * z - 3);
  out[13] = k3m1 * x * (5 * z * z - 1);
  out[14] = k32 * z * (x * x - y * y);
  out[15] = k3m3 * x * (x * x - 3 * y * y);
  if (order < 4) return;
  auto z2 = z * z;
  out[16] = k4m4 * x * y * (x * x - y * y);
  out[17] = k4m3 * y * z * (3 * x * x - y * y);
  out[18] = k4m2 * x * y * (7 * z2 - 1);
  out[19] = k4m1 * y * z * (7 * z2 - 3);
  out[20] = k40 * (35 * z2 * z2 - 30 * z2 + 3);
  out[21] = k4m1 * x * z * (7 * z2 - 3);
  out[22] = k42 * (x * x - y * y) * (7 * z2 - 1);
  out[23] = k4m3 * x * z * (x * x - 3 * y * y);
  out[24] = k44 * (x * x * (x * x - 6 * y * y) + y * y * y * y);
}

void sh_basis_grad(Vec3 d, int order, std::span<Vec3> out) {
  auto x = d.x, y = d.y, z = d.z;
  out[0] = {0, 0, 0};
  if (order < 1) return;
  out[1] = {0, k1, 0};
  out[2] = {0, 0, k1};
  out[3] = {k1, 0, 0};
  if (order < 2) return;
  out[4] = {k2m2 * y, k2m2 * x, 0};
  out[5] = {0, k2m2 * z, k2m2 * y};
  out[6] = {0, 0, 6 * k20 * z};
  out[7] = {k2m2 * z, 0, k2m2 * x};
  out[8] = {2 * k22 * x, -2 * k22 * y, 0};
  if (order < 3) return;
  out[9] = {6 * k3m3 * x * y, 3 * k3m3 * (x * x - y * y), 0};
  out[10] = {k3m2 * y * z, k3m2 * x * z, k3m2 * x * y};
  out[11] = {0, k3m1 * (5 * z * z - 1), 10 * k3m1 * y * z};
  out[12] = {0, 0, k30 * (15 * z * z - 3)};
  out[13] = {k3m1 * (5 * z * z - 1), 0, 10 * k3m1 * x * z};
  out[14] = {2 * k32 * x * z, -2 * k32 * y * z, k32 * (x * x - y * y)};
  out[15] = {3 * k3m3 * (x * x - y * y), -6 * k3m3 * x * y, 0};
  if (order < 4) return;
  auto z2 = z * z;
  out[16] = {k4m4 * y * (3 * x * x - y * y), k4m4 * x * (x * x - 3 * y * y), 0};
  out[17] = {6 * k4m3 * x * y * z, 3 * k4m3 * z * (x * x - y * y),
             k4m3 * y * (3 * x * x - y * y)};
  out[18] = {k4m2 * y * (7 * z2 - 1), k4m2 * x * (7 * z2 - 1), 14 * k4m2 * x * y * z};
  out[19] = {0, k4m1 * z * (7 * z2 - 3), k4m1 * y * (21 * z2 - 3)};
  out[20] = {0, 0, k40 * (140 * z2 * z - 60 * z)};
  out[21] = {k4m1 * z * (7 * z2 - 3), 0, k4m1 * x * (21 * z2 - 3)};
  out[22] = {2 * k42 * x * (7 * z2 - 1), -2 * k42 * y * (7 * z2 - 1),
             14 * k42 * z * (x * x - y * y)};
  out[23] = {3 * k4m3 * z * (x * x - y * y), -6 * k4m3 * x * y * z,
             k4m3 * x * (x * x - 3 * y * y)};
  out[24] = {4 * k44 * x * (x * x - 3 * y * y), 4 * k44 * y * (y * y - 3 * x * x), 0};
}

double diffuse_band_factor(int l) {
  switch (l) {
    case 0: return kPi;
    case 1: return 2 * kPi / 3;
    case 2: return kPi / 4;
    case 3: return 0;
    case 4: return -kPi / 24;
    default: return 0;
  }
}

double specular_band_factor(int l, double g) { return std::exp(-l * l / (2 * g)); }

double specular_band_factor_dg(int l, double g) {
  return std::exp(-l * l / (2 * g)) * (l * l) / (2 * g * g);
}

Mat3 transport_matrix(const FrameTransport& transport) {
  auto rot = matrix_from_quat(transport.residual);
  if (transport.flip_u) rot.col(0) = -rot.col(0);
  if (transport.flip_v) rot.col(1) = -rot.col(1);
  return transport.target_frame * rot;
}

Vec3 assemble_fine_normal_dir(double theta, Vec2 azimuth_dir,
                              const FrameTransport& transport) {
  auto st = std::sin(theta);
  Vec3 r = {st * azimuth_dir.x, st * azimuth_dir.y, std::cos(theta)};
  return transport_matrix(transport) * r;
}

Vec3 assemble_fine_normal(double theta, double phi, const FrameTransport& transport) {
  return assemble_fine_normal_dir(theta, {std::cos(phi), std::sin(phi)}, transport);
}

Vec3 shade(Vec3 /*n_c*/, Vec3 n_f, Vec3 d, Vec3 k_d, double k_s, double g,
           const ShLighting& lighting, ShadeTape* tape) {
  ShadeTape local;
  ShadeTape& t = tape ? *tape : local;
  t.n_f = n_f;
  t.view = d;
  t.g = g;
  t.k_d = k_d;
  t.k_s = k_s;
  t.reflected = reflect(d, n_f);

  auto nd = sh_coeff_count(lighting.diffuse_order);
  auto ns = sh_coeff_count(lighting.specular_order);
  sh_basis(n_f, lighting.diffuse_order, {t.basis_n.data(), size_t(nd)});
  sh_basis(t.reflected, lighting.specular_order, {t.basis_r.data(), size_t(ns)});

  for (int ch = 0; ch < 3; ch++) {
    double e = 0;
    for (int l = 0; l <= lighting.diffuse_order; l++) {
      auto a = diffuse_band_factor(l);
      for (int m = -l; m <= l; m++) {
        auto i = l * (l + 1) + m;
        e += a * lighting.coeffs[ch][i] * t.basis_n[i];
      }
    }
    double s = 0;
    for (int l = 0; l <= lighting.specular_order; l++) {
      auto rho = specular_band_factor(l, g);
      for (int m = -l; m <= l; m++) {
        auto i = l * (l + 1) + m;
        s += rho * lighting.coeffs[ch][i] * t.basis_r[i];
      }
    }
    t.irradiance[ch] = e;
    t.specular[ch] = s;
    t.color_raw[ch] = k_d[ch] * e + k_s * s;
  }
  return max(t.color_raw, Vec3{});
}

void shade_backward(const ShLighting& lighting, const ShadeTape& tape, Vec3 d_color,
                    ShadeGrads& grads) {
  // The >= 0 clamp zeroes gradients of negative raw channels.
  for (int ch = 0; ch < 3; ch++)
    if (tape.color_raw[ch] < 0) d_color[ch] = 0;

  std::array<Vec3, kShMaxCoeffs> grad_n{}, grad_r{};
  sh_basis_grad(tape.n_f, lighting.diffuse_order, {grad_n.data(), grad_n.size()});
  sh_basis_grad(tape.reflected, lighting.specular_order, {grad_r.data(), grad_r.size()});

  Vec3 d_n{}, d_r{};
  for (int ch = 0; ch < 3; ch++) {
    grads.d_k_d[ch] += d_color[ch] * tape.irradiance[ch];
    grads.d_k_s += d_color[ch] * tape.specular[ch];
    auto de = d_color[ch] * tape.k_d[ch];  // d(loss)/dE_ch
    auto ds = d_color[ch] * tape.k_s;      // d(loss)/dS_ch

    for (int l = 0; l <= lighting.diffuse_order; l++) {
      auto a = diffuse_band_factor(l);
      for (int m = -l; m <= l; m++) {
        auto i = l * (l + 1) + m;
        auto coeff = lighting.coeffs[ch][i];
        d_n += (de * a * coeff) * grad_n[i];
        if (grads.d_lighting) (*grads.d_lighting)[ch][i] += de * a * tape.basis_n[i];
      }
    }
    for (int l = 0; l <= lighting.specular_order; l++) {
      auto rho = specular_band_factor(l, tape.g);
      auto drho = specular_band_factor_dg(l, tape.g);
      for (int m = -l; m <= l; m++) {
        auto i = l * (l + 1) + m;
        auto coeff = lighting.coeffs[ch][i];
        d_r += (ds * rho * coeff) * grad_r[i];
        grads.d_g += ds * drho * coeff * tape.basis_r[i];
        if (grads.d_lighting) (*grads.d_lighting)[ch][i] += ds * rho * tape.basis_r[i];
      }
    }
  }

  // r = d - 2 (d.n) n: dr/dn = -2 (n d^T + (d.n) I), applied transposed.
  auto d_vec = tape.view;
  auto n = tape.n_f;
  auto dn_dot = dot(d_vec, n);
  grads.d_n_f += d_n - 2 * (dot(d_r, n) * d_vec + dn_dot * d_r);
}

}  // namespace nrtx
