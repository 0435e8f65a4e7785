#include "nrtx/render.hpp"

#include "nrtx/parallel.hpp"

namespace nrtx {

SceneAccel SceneAccel::build(const TriangleMesh& mesh, double bin_scale) {
  SceneAccel accel;
  accel.mesh = &mesh;
  accel.bvh = build_bvh(mesh);
  accel.mean_edge = mesh.mean_edge_length();
  accel.bins = build_spatial_bins(mesh, std::max(bin_scale * accel.mean_edge, 1e-9));
  return accel;
}

RaySamplePlan plan_shell_samples(const SceneAccel& accel, Vec3 origin, Vec3 dir,
                                 double s_max, int count, Rng* jitter_rng) {
  RaySamplePlan plan;
  plan.s_max = s_max;
  auto t_max = 4.0 * accel.mesh->bounds().diagonal() +
               distance(origin, accel.mesh->bounds().center());
  auto spans = shell_intervals(accel.bvh, origin, dir, s_max, t_max);
  if (spans.empty()) return plan;

  double total = 0;
  for (auto& [a, b] : spans) total += b - a;
  if (total <= 0) return plan;

  plan.t.reserve(count);
  plan.delta.reserve(count);
  // Distribute samples over the merged spans proportionally to length;
  // midpoint rule, optionally jittered within each stratum.
  int assigned = 0;
  for (size_t i = 0; i < spans.size(); i++) {
    auto [a, b] = spans[i];
    int n = i + 1 == spans.size()
                ? count - assigned
                : std::max(1, int(std::floor(count * (b - a) / total)));
    n = std::min(n, count - assigned);
    if (n <= 0) continue;
    assigned += n;
    auto step = (b - a) / n;
    for (int k = 0; k < n; k++) {
      auto u = jitter_rng ? jitter_rng->uniform() : 0.5;
      plan.t.push_back(a + (k + u) * step);
      plan.delta.push_back(step);
    }
  }
  return plan;
}

CompositeResult composite(std::span<const double> sigma, std::span<const Vec3> color,
                          std::span<const double> t, std::span<const double> delta,
                          Vec3 background) {
  CompositeResult out;
  auto n = sigma.size();
  out.weights.resize(n);
  double transmittance = 1;
  double depth_acc = 0, weight_acc = 0;
  Vec3 rgb{};
  for (size_t i = 0; i < n; i++) {
    auto alpha = 1.0 - std::exp(-sigma[i] * delta[i]);
    auto w = transmittance * alpha;
    out.weights[i] = w;
    rgb += w * color[i];
    depth_acc += w * t[i];
    weight_acc += w;
    transmittance *= 1.0 - alpha;
  }
  out.transmittance = transmittance;
  out.rgb = rgb + transmittance * background;
  out.depth = depth_acc / std::max(weight_acc, 1e-12);
  return out;
}

void composite_backward(std::span<const double> sigma, std::span<const Vec3> color,
                        std::span<const double> delta, Vec3 background,
                        const CompositeResult& fwd, Vec3 d_rgb,
                        std::span<const double> d_weights, std::span<double> d_sigma,
                        std::span<Vec3> d_color) {
  auto n = sigma.size();
  // G_i = dL/dw_i; T_{i+1} recovered from the recurrence.
  std::vector<double> g(n);
  for (size_t i = 0; i < n; i++) {
    g[i] = dot(d_rgb, color[i]);
    if (!d_weights.empty()) g[i] += d_weights[i];
    d_color[i] += fwd.weights[i] * d_rgb;
  }
  auto d_trans = dot(d_rgb, background);
  // dL/da_i = G_i T_{i+1} - sum_{j>i} G_j w_j - d_trans * T_{N+1}.
  double suffix = 0;
  std::vector<double> t_next(n);
  double transmittance = 1;
  for (size_t i = 0; i < n; i++) {
    transmittance *= std::exp(-sigma[i] * delta[i]);
    t_next[i] = transmittance;
  }
  for (size_t ii = n; ii-- > 0;) {
    auto da = g[ii] * t_next[ii] - suffix - d_trans * fwd.transmittance;
    d_sigma[ii] += da * delta[ii];
    suffix += g[ii] * fwd.weights[ii];
  }
}

ShellSample evaluate_shell_point(const TextureField& field, const SceneAccel& accel,
                                 Vec3 x, Vec3 view_dir, const RenderSettings& settings,
                                 double s_max, SampleTape* tape) {
  ShellSample out;
  auto proj = project_to_base(*accel.mesh, accel.bvh, accel.bins, x, settings.knn_k,
                              settings.knn_w);
  if (!proj || std::abs(proj->s) > s_max) return out;
  out.valid = true;
  out.projection = *proj;
  auto transport = FrameTransport::identity(accel.mesh->face_frames[proj->face]);
  out.result = evaluate_sample(field, proj->footpoint, proj->s, transport, view_dir, tape);
  return out;
}

static void render_rows(const Camera& cam, const TextureField& field,
                        const SceneAccel& accel, const RenderSettings& settings,
                        Image& img, bool depth_mode) {
  auto s_max = settings.shell_scale * accel.mean_edge;
  parallel_for(0, cam.height, [&](int64_t y, int) {
    std::vector<double> sigma;
    std::vector<Vec3> color;
    for (int x = 0; x < cam.width; x++) {
      auto dir = cam.ray_direction(x + 0.5, y + 0.5);
      auto plan = plan_shell_samples(accel, cam.position, dir, s_max,
                                     settings.samples_per_ray, nullptr);
      sigma.assign(plan.t.size(), 0.0);
      color.assign(plan.t.size(), Vec3{});
      for (size_t i = 0; i < plan.t.size(); i++) {
        auto p = cam.position + plan.t[i] * dir;
        auto sample = evaluate_shell_point(field, accel, p, dir, settings, s_max);
        if (sample.valid) {
          sigma[i] = sample.result.sigma;
          color[i] = sample.result.color;
        }
      }
      auto comp = composite(sigma, color, plan.t, plan.delta, settings.background);
      if (depth_mode) {
        auto d = comp.depth;
        img.set_pixel(x, int(y), {d, d, d});
      } else {
        img.set_pixel(x, int(y), comp.rgb);
      }
    }
  });
}

Image render_capture_view(const Camera& cam, const TextureField& field,
                          const SceneAccel& accel, const RenderSettings& settings) {
  Image img(cam.width, cam.height);
  render_rows(cam, field, accel, settings, img, false);
  return img;
}

Image render_depth(const Camera& cam, const TextureField& field, const SceneAccel& accel,
                   const RenderSettings& settings) {
  Image img(cam.width, cam.height);
  render_rows(cam, field, accel, settings, img, true);
  return img;
}

}  // namespace nrtx
