#pragma once

#include <optional>
#include <string>

#include "nrtx/adam.hpp"
#include "nrtx/losses.hpp"
#include "nrtx/render.hpp"
#include "nrtx/synthetic.hpp"

namespace nrtx {

struct TrainConfig {
  int iterations = 6000;
  int rays_per_batch = 512;
  double learning_rate = 5e-3;
  double lr_grids = 2.0;     // group multipliers on learning_rate
  double lr_decoder = 1.0;
  double lr_lighting = 1.0;
  double lr_centers = 1.0;
  double adam_beta1 = 0.9;
  double adam_beta2 = 0.99;
  double adam_eps = 1e-10;

  double lambda_clu = 1e-5;
  double lambda_dis = 1e-2;
  double lambda_nor = 1.0;
  double kappa = 1.0;
  int clusters_per_level = 64;
  int cluster_samples = 256;

  double fd_step_scale = 0.5;       // x finest grid cell, density FD step
  double normal_weight_min = 0.05;  // supervise samples above this weight
  int normal_max_per_ray = 2;
  bool normal_clamp_max = false;    // Eq. min/max alternative

  int heldout_interval = 1000;
  int log_interval = 100;
  uint64_t seed = 1;

  RenderSettings render;
};

// Multi-view capture: base mesh, posed cameras, float images.
struct CaptureData {
  TriangleMesh mesh;
  std::vector<Camera> cameras;
  std::vector<Image> images;

  static CaptureData from_scene(SyntheticScene&& scene);
  static CaptureData load(const std::string& mesh_path, const std::string& cameras_path,
                          const std::string& images_dir);
  std::vector<int> train_views() const;
  int heldout_view() const;  // -1 when absent
};

struct TrainState {
  TextureField field;
  ClusterState clusters;
  AdamState adam_grid_f, adam_grid_fhat, adam_lighting, adam_centers;
  std::vector<AdamState> adam_decoder_a, adam_decoder_b;  // per layer: w, b, w, b...
  int64_t iteration = 0;

  void init(const FieldConfig& field_config, const CaptureData& capture,
            const TrainConfig& config, const SceneAccel& accel);
  void save(const std::string& path) const;
  // Field/cluster shapes must already match (call init first).
  void load(const std::string& path);
};

struct BatchStats {
  double l_rec = 0, l_clu = 0, l_dis = 0, l_nor = 0;
  double total = 0;
  int supervised = 0;
  int valid_rays = 0;
};

// One batch: forward, all four losses, gradients accumulated into sinks.
// Rays are a pure function of (config.seed, iteration). The gradient-check
// suite calls this directly so tests exercise the exact training path.
BatchStats compute_batch(const CaptureData& capture, const SceneAccel& accel,
                         const TrainConfig& config, TrainState& state, int64_t iteration,
                         FieldGrads& grads, std::span<double> center_grads);

struct MetricsRow {
  int64_t iteration = 0;
  double l_rec = 0, l_clu = 0, l_dis = 0, l_nor = 0;
  std::optional<double> heldout_psnr;
};

struct TrainResult {
  std::vector<MetricsRow> metrics;
  double final_heldout_psnr = 0;
  int64_t iterations_run = 0;
};

// Thrown when the loss goes non-finite; carries the diagnostic dump path.
struct NumericalAbort : std::runtime_error {
  explicit NumericalAbort(const std::string& what) : std::runtime_error(what) {}
};

TrainResult train(const CaptureData& capture, const TrainConfig& config,
                  TrainState& state, const std::string& metrics_csv_path = "",
                  const std::string& abort_dump_path = "");

void write_metrics_csv(const std::vector<MetricsRow>& rows, const std::string& path);

}  // namespace nrtx
