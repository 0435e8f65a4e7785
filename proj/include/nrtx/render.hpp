#pragma once

#include <functional>

#include "nrtx/camera.hpp"
#include "nrtx/field.hpp"
#include "nrtx/image.hpp"
#include "nrtx/projection.hpp"
#include "nrtx/rng.hpp"

namespace nrtx {

// Immutable query structures for one base mesh.
struct SceneAccel {
  const TriangleMesh* mesh = nullptr;
  Bvh bvh;
  SpatialBinIndex bins;
  double mean_edge = 0;

  static SceneAccel build(const TriangleMesh& mesh, double bin_scale = 2.0);
};

struct RenderSettings {
  int samples_per_ray = 48;
  double shell_scale = 4.0;  // s_max = shell_scale * mean edge length
  Vec3 background;
  int knn_k = 8;
  double knn_w = 0.01;
  bool jitter = false;  // stratified sample jitter (training)
};

// Ordered sample parameters restricted to the near-surface shell.
struct RaySamplePlan {
  std::vector<double> t;      // strictly increasing midpoints
  std::vector<double> delta;  // interval lengths
  double s_max = 0;
};

RaySamplePlan plan_shell_samples(const SceneAccel& accel, Vec3 origin, Vec3 dir,
                                 double s_max, int count, Rng* jitter_rng = nullptr);

struct CompositeResult {
  Vec3 rgb;
  double depth = 0;
  std::vector<double> weights;
  double transmittance = 1;  // past the last sample
};

// alpha_i = 1 - exp(-sigma_i delta_i), w_i = T_i alpha_i,
// rgb = sum w_i c_i + (1 - sum w) * background.
CompositeResult composite(std::span<const double> sigma, std::span<const Vec3> color,
                          std::span<const double> t, std::span<const double> delta,
                          Vec3 background);

// d_weights may be empty; d_sigma/d_color are accumulated into.
void composite_backward(std::span<const double> sigma, std::span<const Vec3> color,
                        std::span<const double> delta, Vec3 background,
                        const CompositeResult& fwd, Vec3 d_rgb,
                        std::span<const double> d_weights, std::span<double> d_sigma,
                        std::span<Vec3> d_color);

// Projection + field evaluation for one shell sample; sigma = 0 on
// projection failure or outside the shell.
struct ShellSample {
  bool valid = false;
  Projection projection;
  SampleResult result;
};

ShellSample evaluate_shell_point(const TextureField& field, const SceneAccel& accel,
                                 Vec3 x, Vec3 view_dir, const RenderSettings& settings,
                                 double s_max, SampleTape* tape = nullptr);

Image render_capture_view(const Camera& cam, const TextureField& field,
                          const SceneAccel& accel, const RenderSettings& settings);

// Depth visualization companion (weight-averaged t).
Image render_depth(const Camera& cam, const TextureField& field, const SceneAccel& accel,
                   const RenderSettings& settings);

}  // namespace nrtx
