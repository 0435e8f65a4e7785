#include "nrtx/trainer.hpp"

#include <cstdio>
#include <filesystem>
#include <fstream>

#include "nrtx/parallel.hpp"

namespace nrtx {

CaptureData CaptureData::from_scene(SyntheticScene&& scene) {
  CaptureData data;
  data.mesh = std::move(scene.mesh);
  data.cameras = std::move(scene.cameras);
  data.images = std::move(scene.images);
  return data;
}

CaptureData CaptureData::load(const std::string& mesh_path,
                              const std::string& cameras_path,
                              const std::string& images_dir) {
  namespace fs = std::filesystem;
  CaptureData data;
  data.mesh = load_obj(mesh_path);
  data.cameras = load_cameras(cameras_path);
  data.images.reserve(data.cameras.size());
  for (auto& cam : data.cameras) {
    auto path = fs::path(images_dir) / cam.image_path;
    // Prefer the raw float dump when present, quantized PNG otherwise.
    auto raw = path;
    raw.replace_extension(".nri");
    if (fs::exists(raw))
      data.images.push_back(read_raw_image(raw.string()));
    else
      data.images.push_back(read_png(path.string()));
    if (data.images.back().width != cam.width || data.images.back().height != cam.height)
      throw std::invalid_argument("image size does not match camera: " + path.string());
  }
  return data;
}

std::vector<int> CaptureData::train_views() const {
  std::vector<int> out;
  for (size_t i = 0; i < cameras.size(); i++)
    if (cameras[i].split != "heldout") out.push_back(int(i));
  return out;
}

int CaptureData::heldout_view() const {
  for (size_t i = 0; i < cameras.size(); i++)
    if (cameras[i].split == "heldout") return int(i);
  return -1;
}

void TrainState::init(const FieldConfig& field_config, const CaptureData& capture,
                      const TrainConfig& config, const SceneAccel& accel) {
  auto rng = named_stream(config.seed, "field_init");
  auto bounds = capture.mesh.bounds().dilated(config.render.shell_scale *
                                              accel.mean_edge);
  field.init(field_config, bounds, rng);

  // Cluster centers start from features of random surface points.
  auto sample_rng = named_stream(config.seed, "cluster_init");
  auto points = sample_surface_points(capture.mesh, 512, sample_rng);
  auto f_dim = field.f_dim();
  std::vector<double> feats(points.size() * f_dim);
  std::vector<double> fhat(field.fhat_dim());
  for (size_t i = 0; i < points.size(); i++)
    field.features_at(points[i].position, {feats.data() + i * f_dim, size_t(f_dim)},
                      fhat);
  clusters.init(field.grid_f.config.levels, field.grid_f.config.features_per_level,
                config.clusters_per_level, feats, sample_rng);

  adam_grid_f.init(field.grid_f.table.size());
  adam_grid_fhat.init(field.grid_fhat.table.size());
  adam_lighting.init(3 * kShMaxCoeffs);
  adam_centers.init(clusters.centers.size());
  auto init_layers = [](const Mlp& mlp, std::vector<AdamState>& states) {
    states.resize(2 * mlp.layer_count());
    for (int l = 0; l < mlp.layer_count(); l++) {
      states[2 * l].init(mlp.weights[l].size());
      states[2 * l + 1].init(mlp.biases[l].size());
    }
  };
  init_layers(field.decoder.head_a, adam_decoder_a);
  init_layers(field.decoder.head_b, adam_decoder_b);
  iteration = 0;
}

namespace {

double softplus(double x) { return x > 30 ? x : std::log1p(std::exp(x)); }

// Density-only evaluation for the finite-difference normal target.
double field_density(const TextureField& field, const SceneAccel& accel, Vec3 x,
                     const RenderSettings& rs, double s_max) {
  auto proj = project_to_base(*accel.mesh, accel.bvh, accel.bins, x, rs.knn_k, rs.knn_w);
  if (!proj || std::abs(proj->s) > s_max) return 0.0;
  std::vector<double> f(field.f_dim());
  std::vector<double> embed(field.decoder.embedding.dim());
  hash_encode(field.grid_f, field.domain.to_unit(proj->footpoint), f);
  field.decoder.embedding.embed(proj->s, embed);
  std::vector<double> in(f);
  in.insert(in.end(), embed.begin(), embed.end());
  std::vector<double> raw(Decoder::kHeadAOutputs);
  mlp_forward(field.decoder.head_a, in, raw);
  return softplus(raw[0]);
}

struct RaySpec {
  int view = 0;
  int px = 0, py = 0;
};

struct NormalRecord {
  SampleTape tape;
  Vec3 d_n_f;
  double loss = 0;
};

struct ClusterRecord {
  std::vector<double> f;
  HashEncodeTape tape;
};

struct WorkerOutput {
  double l_rec = 0;
  double l_dis = 0;
  int valid_rays = 0;
  std::vector<NormalRecord> normal_records;
  std::vector<ClusterRecord> cluster_records;
};

}  // namespace

BatchStats compute_batch(const CaptureData& capture, const SceneAccel& accel,
                         const TrainConfig& config, TrainState& state, int64_t iteration,
                         FieldGrads& grads, std::span<double> center_grads) {
  auto& field = state.field;
  auto s_max = config.render.shell_scale * accel.mean_edge;
  auto views = capture.train_views();
  if (views.empty()) throw std::invalid_argument("no training views");

  // Ray selection is a pure function of (seed, iteration).
  auto pick_rng = named_stream(config.seed, "batch_rays", uint64_t(iteration));
  std::vector<RaySpec> rays(config.rays_per_batch);
  for (auto& r : rays) {
    r.view = views[pick_rng.next_below(uint32_t(views.size()))];
    auto& cam = capture.cameras[r.view];
    r.px = int(pick_rng.next_below(uint32_t(cam.width)));
    r.py = int(pick_rng.next_below(uint32_t(cam.height)));
  }

  auto workers = worker_count();
  std::vector<FieldGrads> sinks(workers);
  for (auto& s : sinks) s.init_like(field);
  std::vector<WorkerOutput> outputs(workers);

  const double rec_scale = 1.0 / (3.0 * config.rays_per_batch);
  const double dis_scale = config.lambda_dis / config.rays_per_batch;
  // Finite-difference step: half the finest f-grid cell in world units.
  auto finest_res = field.grid_f.config.level_resolution(field.grid_f.config.levels - 1);
  auto fd_h = config.fd_step_scale / (field.domain.inv_scale * finest_res);

  parallel_chunks(0, config.rays_per_batch, [&](int64_t lo, int64_t hi, int worker) {
    auto& sink = sinks[worker];
    auto& out = outputs[worker];
    std::vector<SampleTape> tapes;
    std::vector<double> sigma, t_mid, delta, d_sigma, d_weights;
    std::vector<Vec3> color, d_color;
    std::vector<Projection> projections;
    std::vector<char> valid;

    for (auto ri = lo; ri < hi; ri++) {
      auto& spec = rays[size_t(ri)];
      auto& cam = capture.cameras[spec.view];
      auto gt = capture.images[spec.view].get_pixel(spec.px, spec.py);
      auto dir = cam.ray_direction(spec.px + 0.5, spec.py + 0.5);
      auto jitter = named_stream(config.seed, "ray_jitter",
                                 uint64_t(iteration) * config.rays_per_batch + ri);
      auto plan = plan_shell_samples(accel, cam.position, dir, s_max,
                                     config.render.samples_per_ray, &jitter);
      auto n = plan.t.size();
      tapes.resize(std::max(tapes.size(), n));
      sigma.assign(n, 0.0);
      color.assign(n, Vec3{});
      projections.assign(n, Projection{});
      valid.assign(n, 0);

      for (size_t i = 0; i < n; i++) {
        auto p = cam.position + plan.t[i] * dir;
        auto proj = project_to_base(*accel.mesh, accel.bvh, accel.bins, p,
                                    config.render.knn_k, config.render.knn_w);
        if (!proj || std::abs(proj->s) > s_max) continue;
        valid[i] = 1;
        projections[i] = *proj;
        auto transport =
            FrameTransport::identity(accel.mesh->face_frames[proj->face]);
        auto res = evaluate_sample(field, proj->footpoint, proj->s, transport, dir,
                                   &tapes[i]);
        sigma[i] = res.sigma;
        color[i] = res.color;
      }

      auto comp = composite(sigma, color, plan.t, plan.delta, config.render.background);
      out.valid_rays++;
      for (int c = 0; c < 3; c++) out.l_rec += std::abs(comp.rgb[c] - gt[c]);

      Vec3 d_rgb;
      for (int c = 0; c < 3; c++) {
        auto d = comp.rgb[c] - gt[c];
        d_rgb[c] = d > 0 ? rec_scale : (d < 0 ? -rec_scale : 0.0);
      }

      if (n == 0) continue;
      out.l_dis += loss_distortion(comp.weights, plan.t, plan.delta);
      d_weights.assign(n, 0.0);
      loss_distortion_backward(comp.weights, plan.t, plan.delta, dis_scale, d_weights);

      d_sigma.assign(n, 0.0);
      d_color.assign(n, Vec3{});
      composite_backward(sigma, color, plan.delta, config.render.background, comp, d_rgb,
                         d_weights, d_sigma, d_color);

      int best = -1;
      for (size_t i = 0; i < n; i++) {
        if (!valid[i]) continue;
        backward_sample(field, tapes[i], d_sigma[i], d_color[i], sink,
                        projections[i].coarse_normal);
        if (best < 0 || comp.weights[i] > comp.weights[best]) best = int(i);
      }

      // Normal supervision for the heaviest samples along the ray.
      if (config.lambda_nor > 0) {
        std::vector<int> picks;
        for (size_t i = 0; i < n; i++)
          if (valid[i] && comp.weights[i] > config.normal_weight_min) picks.push_back(int(i));
        std::sort(picks.begin(), picks.end(), [&](int a, int b) {
          return comp.weights[a] > comp.weights[b] || (comp.weights[a] == comp.weights[b] && a < b);
        });
        if (int(picks.size()) > config.normal_max_per_ray)
          picks.resize(config.normal_max_per_ray);
        std::sort(picks.begin(), picks.end());
        for (auto i : picks) {
          auto p = cam.position + plan.t[size_t(i)] * dir;
          Vec3 grad{};
          for (int axis = 0; axis < 3; axis++) {
            Vec3 e{};
            e[axis] = fd_h;
            grad[axis] = (field_density(field, accel, p + e, config.render, s_max) -
                          field_density(field, accel, p - e, config.render, s_max)) /
                         (2 * fd_h);
          }
          auto res = loss_normal(-grad, tapes[size_t(i)].shade.n_f, config.normal_clamp_max);
          if (res.skipped) continue;
          out.normal_records.push_back({tapes[size_t(i)], res.d_n_f, res.loss});
        }
      }

      // The heaviest sample feeds the clustering regularizer.
      if (best >= 0) {
        ClusterRecord rec;
        rec.f = tapes[size_t(best)].f;
        rec.tape = tapes[size_t(best)].hash_f;
        out.cluster_records.push_back(std::move(rec));
      }
    }
  });

  BatchStats stats;
  for (auto& out : outputs) {
    stats.l_rec += out.l_rec;
    stats.l_dis += out.l_dis;
    stats.valid_rays += out.valid_rays;
  }
  stats.l_rec /= 3.0 * config.rays_per_batch;
  stats.l_dis /= config.rays_per_batch;

  for (auto& sink : sinks) {
    sink.reduce_grids_into(grads);
    sink.reduce_small_into(grads);
  }

  // Normal loss: mean over supervised samples, gradient to (theta, phi).
  std::vector<NormalRecord*> normal_records;
  for (auto& out : outputs)
    for (auto& r : out.normal_records) normal_records.push_back(&r);
  stats.supervised = int(normal_records.size());
  if (stats.supervised > 0) {
    double total = 0;
    for (auto* r : normal_records) total += r->loss;
    stats.l_nor = total / stats.supervised;
    auto scale = config.lambda_nor / stats.supervised;
    parallel_chunks(0, int64_t(normal_records.size()), [&](int64_t lo, int64_t hi,
                                                           int worker) {
      for (auto i = lo; i < hi; i++) {
        auto* r = normal_records[size_t(i)];
        backward_sample(field, r->tape, 0.0, Vec3{}, sinks[worker], Vec3{}, nullptr,
                        scale * r->d_n_f);
      }
    });
    for (auto& sink : sinks) {
      sink.reduce_grids_into(grads);
      sink.reduce_small_into(grads);
    }
  }

  // Clustering over the batch footpoint features, per grid level.
  if (config.lambda_clu > 0 && state.clusters.centers_per_level > 0) {
    std::vector<ClusterRecord*> records;
    for (auto& out : outputs) {
      for (auto& r : out.cluster_records) {
        if (int(records.size()) >= config.cluster_samples) break;
        records.push_back(&r);
      }
    }
    auto n = int(records.size());
    if (n > 0) {
      auto levels = state.clusters.levels;
      auto f_dim = state.clusters.feature_dim;
      auto j = state.clusters.centers_per_level;
      std::vector<double> level_feats(size_t(n) * f_dim);
      std::vector<double> d_feats(size_t(n) * f_dim);
      std::vector<double> d_full(size_t(n) * levels * f_dim, 0.0);
      double loss_sum = 0;
      auto level_scale = config.lambda_clu / levels;
      for (int level = 0; level < levels; level++) {
        for (int i = 0; i < n; i++)
          for (int f = 0; f < f_dim; f++)
            level_feats[size_t(i) * f_dim + f] = records[i]->f[size_t(level) * f_dim + f];
        std::fill(d_feats.begin(), d_feats.end(), 0.0);
        std::span<double> d_centers{center_grads.data() + size_t(level) * j * f_dim,
                                    size_t(j) * f_dim};
        auto res = cluster_loss_level(level_feats, n, f_dim,
                                      {state.clusters.level_centers(level),
                                       size_t(j) * f_dim},
                                      j, config.kappa, d_feats, d_centers);
        loss_sum += res.loss;
        for (int i = 0; i < n; i++)
          for (int f = 0; f < f_dim; f++)
            d_full[(size_t(i) * levels + level) * f_dim + f] =
                d_feats[size_t(i) * f_dim + f];
      }
      // Scale the center gradients by the loss weight.
      for (auto& g : center_grads) g *= level_scale;
      stats.l_clu = loss_sum / levels;
      for (int i = 0; i < n; i++) {
        std::vector<double> d_f(size_t(levels) * f_dim);
        for (size_t k = 0; k < d_f.size(); k++)
          d_f[k] = level_scale * d_full[size_t(i) * levels * f_dim + k];
        add_grid_f_gradient(field, records[i]->tape, d_f, grads);
      }
    }
  }

  stats.total = stats.l_rec + config.lambda_clu * stats.l_clu +
                config.lambda_dis * stats.l_dis + config.lambda_nor * stats.l_nor;
  return stats;
}

static void adam_group(std::span<double> params, std::span<const double> grads,
                       AdamState& state, const TrainConfig& cfg, double mult,
                       int* skipped) {
  if (!adam_step(params, grads, state, cfg.learning_rate * mult, cfg.adam_beta1,
                 cfg.adam_beta2, cfg.adam_eps))
    (*skipped)++;
}

TrainResult train(const CaptureData& capture, const TrainConfig& config,
                  TrainState& state, const std::string& metrics_csv_path,
                  const std::string& abort_dump_path) {
  auto accel = SceneAccel::build(capture.mesh);
  TrainResult result;

  FieldGrads grads;
  grads.init_like(state.field);
  std::vector<double> center_grads(state.clusters.centers.size(), 0.0);

  std::ofstream csv;
  if (!metrics_csv_path.empty()) {
    csv.open(metrics_csv_path);
    csv << "iteration,L_rec,L_clu,L_dis,L_nor,heldout_PSNR\n";
  }
  auto emit = [&](const MetricsRow& row) {
    result.metrics.push_back(row);
    if (csv.is_open()) {
      csv << row.iteration << "," << row.l_rec << "," << row.l_clu << "," << row.l_dis
          << "," << row.l_nor << ",";
      if (row.heldout_psnr) csv << *row.heldout_psnr;
      csv << "\n";
      csv.flush();
    }
  };

  auto heldout = capture.heldout_view();
  auto eval_heldout = [&]() -> std::optional<double> {
    if (heldout < 0) return std::nullopt;
    auto img = render_capture_view(capture.cameras[heldout], state.field, accel,
                                   config.render);
    return psnr(img, capture.images[heldout]);
  };

  int skipped_tensors = 0;
  for (auto iter = state.iteration; iter < config.iterations; iter++) {
    auto stats = compute_batch(capture, accel, config, state, iter, grads, center_grads);

    if (!std::isfinite(stats.total)) {
      if (!abort_dump_path.empty()) {
        std::ofstream dump(abort_dump_path);
        dump << "non-finite loss at iteration " << iter << "\n"
             << "L_rec=" << stats.l_rec << " L_clu=" << stats.l_clu
             << " L_dis=" << stats.l_dis << " L_nor=" << stats.l_nor << "\n"
             << "seed=" << config.seed << " rays_per_batch=" << config.rays_per_batch
             << "\n";
      }
      throw NumericalAbort("non-finite loss at iteration " + std::to_string(iter));
    }

    adam_group(state.field.grid_f.table, grads.grid_f, state.adam_grid_f, config,
               config.lr_grids, &skipped_tensors);
    adam_group(state.field.grid_fhat.table, grads.grid_fhat, state.adam_grid_fhat, config,
               config.lr_grids, &skipped_tensors);
    auto step_mlp = [&](Mlp& mlp, MlpGrads& g, std::vector<AdamState>& states) {
      for (int l = 0; l < mlp.layer_count(); l++) {
        adam_group(mlp.weights[l], g.weights[l], states[2 * l], config,
                   config.lr_decoder, &skipped_tensors);
        adam_group(mlp.biases[l], g.biases[l], states[2 * l + 1], config,
                   config.lr_decoder, &skipped_tensors);
      }
    };
    step_mlp(state.field.decoder.head_a, grads.decoder.head_a, state.adam_decoder_a);
    step_mlp(state.field.decoder.head_b, grads.decoder.head_b, state.adam_decoder_b);
    adam_group({&state.field.lighting.coeffs[0][0], 3 * kShMaxCoeffs},
               {&grads.lighting[0][0], 3 * kShMaxCoeffs}, state.adam_lighting, config,
               config.lr_lighting, &skipped_tensors);
    if (!state.clusters.centers.empty())
      adam_group(state.clusters.centers, center_grads, state.adam_centers, config,
                 config.lr_centers, &skipped_tensors);

    grads.clear_grids();
    grads.clear_small();
    std::fill(center_grads.begin(), center_grads.end(), 0.0);

    state.iteration = iter + 1;
    bool last = iter + 1 == config.iterations;
    if ((iter + 1) % config.log_interval == 0 || last) {
      MetricsRow row;
      row.iteration = iter + 1;
      row.l_rec = stats.l_rec;
      row.l_clu = stats.l_clu;
      row.l_dis = stats.l_dis;
      row.l_nor = stats.l_nor;
      if ((iter + 1) % config.heldout_interval == 0 || last) row.heldout_psnr = eval_heldout();
      emit(row);
      if (row.heldout_psnr)
        std::fprintf(stderr, "[train] iter %lld L_rec %.4f heldout PSNR %.2f\n",
                     (long long)row.iteration, row.l_rec, *row.heldout_psnr);
    }
  }

  result.iterations_run = state.iteration;
  if (!result.metrics.empty() && result.metrics.back().heldout_psnr)
    result.final_heldout_psnr = *result.metrics.back().heldout_psnr;
  return result;
}

void write_metrics_csv(const std::vector<MetricsRow>& rows, const std::string& path) {
  std::ofstream csv(path);
  csv << "iteration,L_rec,L_clu,L_dis,L_nor,heldout_PSNR\n";
  for (auto& row : rows) {
    csv << row.iteration << "," << row.l_rec << "," << row.l_clu << "," << row.l_dis
        << "," << row.l_nor << ",";
    if (row.heldout_psnr) csv << *row.heldout_psnr;
    csv << "\n";
  }
}

void TrainState::save(const std::string& path) const {
  auto tensors = field.to_tensors();
  tensors.push_back(
      {"clusters.centers",
       {uint32_t(clusters.levels), uint32_t(clusters.centers_per_level),
        uint32_t(clusters.feature_dim)},
       std::vector<float>(clusters.centers.begin(), clusters.centers.end())});
  tensors.push_back({"iteration", {1}, {float(iteration)}});
  auto dump_adam = [&](const std::string& prefix, const AdamState& s) {
    tensors.push_back({prefix + ".m", {uint32_t(s.m.size())},
                       std::vector<float>(s.m.begin(), s.m.end())});
    tensors.push_back({prefix + ".v", {uint32_t(s.v.size())},
                       std::vector<float>(s.v.begin(), s.v.end())});
    tensors.push_back({prefix + ".t", {1}, {float(s.step)}});
  };
  dump_adam("adam.grid_f", adam_grid_f);
  dump_adam("adam.grid_fhat", adam_grid_fhat);
  dump_adam("adam.lighting", adam_lighting);
  dump_adam("adam.centers", adam_centers);
  for (size_t i = 0; i < adam_decoder_a.size(); i++)
    dump_adam("adam.decoder_a." + std::to_string(i), adam_decoder_a[i]);
  for (size_t i = 0; i < adam_decoder_b.size(); i++)
    dump_adam("adam.decoder_b." + std::to_string(i), adam_decoder_b[i]);
  write_checkpoint(path, tensors);
}

void TrainState::load(const std::string& path) {
  auto tensors = read_checkpoint(path);
  field.from_tensors(tensors);
  auto centers = find_tensor(tensors, "clusters.centers");
  if (centers) {
    clusters.levels = int(centers->dims[0]);
    clusters.centers_per_level = int(centers->dims[1]);
    clusters.feature_dim = int(centers->dims[2]);
    clusters.centers.assign(centers->data.begin(), centers->data.end());
  }
  if (auto it = find_tensor(tensors, "iteration")) iteration = int64_t(it->data[0]);
  auto load_adam = [&](const std::string& prefix, AdamState& s) {
    auto m = find_tensor(tensors, prefix + ".m");
    auto v = find_tensor(tensors, prefix + ".v");
    auto t = find_tensor(tensors, prefix + ".t");
    if (!m || !v || !t) return;
    s.m.assign(m->data.begin(), m->data.end());
    s.v.assign(v->data.begin(), v->data.end());
    s.step = int64_t(t->data[0]);
  };
  load_adam("adam.grid_f", adam_grid_f);
  load_adam("adam.grid_fhat", adam_grid_fhat);
  load_adam("adam.lighting", adam_lighting);
  load_adam("adam.centers", adam_centers);
  for (size_t i = 0; i < adam_decoder_a.size(); i++)
    load_adam("adam.decoder_a." + std::to_string(i), adam_decoder_a[i]);
  for (size_t i = 0; i < adam_decoder_b.size(); i++)
    load_adam("adam.decoder_b." + std::to_string(i), adam_decoder_b[i]);
}

}  // namespace nrtx
