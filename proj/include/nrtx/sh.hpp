#pragma once

#include <array>
#include <span>

#include "nrtx/math.hpp"

namespace nrtx {

constexpr int kShMaxOrder = 4;
constexpr int kShMaxCoeffs = (kShMaxOrder + 1) * (kShMaxOrder + 1);  // 25

inline constexpr int sh_coeff_count(int order) { return (order + 1) * (order + 1); }

// Real spherical harmonics basis at a unit direction, bands l <= order,
// indexed l*(l+1)+m. Standard orthonormal normalization.
void sh_basis(Vec3 dir, int order, std::span<double> out);

// Cartesian gradient of each basis polynomial (homogeneous extension);
// chaining with tangent perturbations of a unit direction is exact.
void sh_basis_grad(Vec3 dir, int order, std::span<Vec3> out);

// Clamped-cosine convolution factors for irradiance, per band.
double diffuse_band_factor(int l);
// Phong-lobe band attenuation exp(-l^2 / (2g)).
double specular_band_factor(int l, double g);
double specular_band_factor_dg(int l, double g);

// Environment lighting as per-channel SH coefficients; trainable at capture.
struct ShLighting {
  int diffuse_order = 2;
  int specular_order = 4;
  std::array<std::array<double, kShMaxCoeffs>, 3> coeffs{};  // [channel][lm]

  int coeff_count() const { return sh_coeff_count(specular_order); }
  int64_t param_count() const { return 3 * static_cast<int64_t>(coeff_count()); }
};

// Residual rotation plus the destination frame used when the texture is
// mapped to a new shape. Flips record the handedness of augmented patches;
// they mirror R(theta, phi) before the residual rotation is applied.
struct FrameTransport {
  Quat residual;   // T_s^-1 T_c as a rotation
  bool flip_u = false;
  bool flip_v = false;
  Mat3 target_frame;  // T~_c columns (t, b, n)

  static FrameTransport identity(const Mat3& frame) {
    FrameTransport t;
    t.target_frame = frame;
    return t;
  }
};

// n~_f = T~_c * Q * flip(R(theta, phi)); unit by construction.
Vec3 assemble_fine_normal(double theta, double phi, const FrameTransport& transport);
// Same, with the azimuth given as (cos phi, sin phi).
Vec3 assemble_fine_normal_dir(double theta, Vec2 azimuth_dir,
                              const FrameTransport& transport);

// Combined matrix M with n = M * R(theta, phi); used by the backward chain.
Mat3 transport_matrix(const FrameTransport& transport);

struct ShadeTape {
  Vec3 n_f;
  Vec3 reflected;
  double g = 1;
  Vec3 k_d;
  double k_s = 0;
  std::array<double, kShMaxCoeffs> basis_n{};
  std::array<double, kShMaxCoeffs> basis_r{};
  Vec3 view;
  Vec3 irradiance;   // E per channel
  Vec3 specular;     // S per channel
  Vec3 color_raw;    // before the >= 0 clamp
};

// c = k_d * E(n_f) + k_s * S(reflect(d, n_f), g), via SH convolution.
// d is the unit direction from the camera toward the point.
Vec3 shade(Vec3 n_c, Vec3 n_f, Vec3 d, Vec3 k_d, double k_s, double g,
           const ShLighting& lighting, ShadeTape* tape = nullptr);

struct ShadeGrads {
  Vec3 d_k_d;
  double d_k_s = 0;
  double d_g = 0;
  Vec3 d_n_f;
  // d(loss)/d(lighting coeffs), same layout as ShLighting::coeffs.
  std::array<std::array<double, kShMaxCoeffs>, 3>* d_lighting = nullptr;
};

void shade_backward(const ShLighting& lighting, const ShadeTape& tape, Vec3 d_color,
                    ShadeGrads& grads);

}  // namespace nrtx
