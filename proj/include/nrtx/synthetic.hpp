#pragma once

#include <functional>
#include <string>

#include "nrtx/camera.hpp"
#include "nrtx/image.hpp"
#include "nrtx/mesh.hpp"
#include "nrtx/sh.hpp"

namespace nrtx {

struct SyntheticSceneParams {
  std::string kind = "bump_plane";  // bump_plane | thorn_sphere
  int views = 32;
  int image_size = 64;
  uint64_t seed = 1;

  double plane_half = 0.5;
  int plane_resolution = 21;  // vertices per side
  double sphere_radius = 0.35;
  int sphere_subdivisions = 3;

  double amplitude = 0.05;     // meso height scale
  int bumps_per_side = 6;      // bump grid density
  double sigma_peak = 250;     // density inside the meso surface
  double transition = 0.012;   // smoothstep width of the density falloff

  double camera_distance = 1.1;
  double camera_elevation_deg = 48;
  double fov_deg = 40;
  int reference_samples = 192;  // marcher steps (4x the training default)
};

// Desk-scale stand-in for a real capture: analytic density and color with
// ground-truth images from an independent dense ray-marcher.
struct SyntheticScene {
  SyntheticSceneParams params;
  TriangleMesh mesh;                 // base shape (smooth, no meso detail)
  std::vector<Camera> cameras;       // train views plus one heldout
  std::vector<Image> images;         // float RGB, aligned with cameras
  ShLighting ground_truth_lighting;  // order-2 environment used for shading

  std::function<double(Vec3)> density;
  std::function<Vec3(Vec3)> color;

  int heldout_index() const;
};

SyntheticScene generate_synthetic_scene(const SyntheticSceneParams& params);

// Midpoint-rule emission/absorption marcher over [t0, t1]; the ground-truth
// path and the transmittance oracles share it.
Vec3 march_reference(const std::function<double(Vec3)>& density,
                     const std::function<Vec3(Vec3)>& color, Vec3 origin, Vec3 dir,
                     double t0, double t1, int steps, Vec3 background);

// Writes images (PNG + raw float), cameras.json, base mesh and the scene
// manifest into `dir`.
void save_scene(const SyntheticScene& scene, const std::string& dir);

}  // namespace nrtx
