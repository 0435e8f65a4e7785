#include "nrtx/synthetic.hpp"

#include <filesystem>
#include <fstream>
#include <memory>

#include <json.hpp>

#include "nrtx/parallel.hpp"
#include "nrtx/rng.hpp"

namespace nrtx {

namespace {

struct BumpSet {
  std::vector<Vec2> centers;
  std::vector<double> radius;
  std::vector<double> height;

  double eval(Vec2 p) const {
    double h = 0;
    for (size_t i = 0; i < centers.size(); i++) {
      auto d = p - centers[i];
      auto r2 = dot(d, d) / (radius[i] * radius[i]);
      if (r2 < 9) h += height[i] * std::exp(-0.5 * r2);
    }
    return h;
  }
};

BumpSet make_bumps(const SyntheticSceneParams& params, Rng& rng, double extent) {
  BumpSet bumps;
  auto n = params.bumps_per_side;
  auto cell = 2 * extent / n;
  for (int i = 0; i < n; i++)
    for (int j = 0; j < n; j++) {
      Vec2 c = {-extent + cell * (j + 0.25 + 0.5 * rng.uniform()),
                -extent + cell * (i + 0.25 + 0.5 * rng.uniform())};
      bumps.centers.push_back(c);
      bumps.radius.push_back(cell * rng.uniform(0.22, 0.38));
      bumps.height.push_back(params.amplitude * rng.uniform(0.55, 1.0));
    }
  return bumps;
}

// Banded procedural albedo correlated with the local height.
Vec3 albedo_pattern(Vec2 p, double h, double amplitude) {
  auto stripes = 0.5 + 0.5 * std::sin(23.0 * p.x + 11.0 * std::sin(7.0 * p.y));
  auto lift = amplitude > 0 ? std::clamp(h / amplitude, 0.0, 1.0) : 0.0;
  Vec3 low = {0.18, 0.26, 0.12};
  Vec3 high = {0.78, 0.62, 0.32};
  auto base = lerp(low, high, lift);
  base = base * (0.75 + 0.25 * stripes);
  return clamp(base, 0.02, 0.95);
}

ShLighting make_lighting(Rng& rng) {
  ShLighting light;
  light.diffuse_order = 2;
  light.specular_order = 2;
  for (int ch = 0; ch < 3; ch++) {
    auto& c = light.coeffs[ch];
    c.fill(0.0);
    c[0] = 1.9 + 0.2 * rng.uniform();   // DC
    c[2] = 0.65 + 0.1 * rng.uniform();  // light from +z
    c[1] = rng.uniform(-0.12, 0.12);
    c[3] = rng.uniform(-0.12, 0.12);
    for (int i = 4; i < 9; i++) c[i] = rng.uniform(-0.06, 0.06);
  }
  return light;
}

Vec3 irradiance(const ShLighting& light, Vec3 n) {
  std::array<double, 9> basis{};
  sh_basis(n, 2, {basis.data(), basis.size()});
  Vec3 e{};
  for (int ch = 0; ch < 3; ch++)
    for (int l = 0; l <= 2; l++) {
      auto a = diffuse_band_factor(l);
      for (int m = -l; m <= l; m++) {
        auto i = l * (l + 1) + m;
        e[ch] += a * light.coeffs[ch][i] * basis[i];
      }
    }
  return e;
}

}  // namespace

Vec3 march_reference(const std::function<double(Vec3)>& density,
                     const std::function<Vec3(Vec3)>& color, Vec3 origin, Vec3 dir,
                     double t0, double t1, int steps, Vec3 background) {
  Vec3 rgb{};
  double transmittance = 1;
  auto step = (t1 - t0) / steps;
  if (step <= 0) return background;
  for (int i = 0; i < steps; i++) {
    auto t = t0 + (i + 0.5) * step;
    auto p = origin + t * dir;
    auto sigma = density(p);
    if (sigma <= 0) continue;
    auto alpha = 1.0 - std::exp(-sigma * step);
    rgb += transmittance * alpha * color(p);
    transmittance *= 1.0 - alpha;
    if (transmittance < 1e-5) break;
  }
  return rgb + transmittance * background;
}

int SyntheticScene::heldout_index() const {
  for (size_t i = 0; i < cameras.size(); i++)
    if (cameras[i].split == "heldout") return int(i);
  return -1;
}

SyntheticScene generate_synthetic_scene(const SyntheticSceneParams& params) {
  SyntheticScene scene;
  scene.params = params;
  auto rng = named_stream(params.seed, "synthetic_scene");
  scene.ground_truth_lighting = make_lighting(rng);

  const bool plane = params.kind == "bump_plane";
  if (!plane && params.kind != "thorn_sphere")
    throw std::invalid_argument("unknown scene kind: " + params.kind);

  auto bumps = std::make_shared<BumpSet>(
      make_bumps(params, rng, plane ? params.plane_half : kPi * params.sphere_radius));
  auto light = scene.ground_truth_lighting;
  auto amplitude = params.amplitude;
  auto sigma_peak = params.sigma_peak;
  auto tau = params.transition;

  if (plane) {
    scene.mesh = make_plane_mesh(params.plane_resolution, params.plane_half);
    auto height = [bumps](Vec2 p) { return bumps->eval(p); };
    scene.density = [height, sigma_peak, tau](Vec3 x) {
      auto h = height({x.x, x.y});
      return sigma_peak * smoothstep01((h - x.z) / tau);
    };
    scene.color = [height, light, amplitude](Vec3 x) {
      Vec2 p = {x.x, x.y};
      const double eps = 1e-4;
      auto hx = (height({p.x + eps, p.y}) - height({p.x - eps, p.y})) / (2 * eps);
      auto hy = (height({p.x, p.y + eps}) - height({p.x, p.y - eps})) / (2 * eps);
      auto n = normalize(Vec3{-hx, -hy, 1});
      auto alb = albedo_pattern(p, height(p), amplitude);
      return clamp(alb * irradiance(light, n), 0.0, 1.0);
    };
  } else {
    scene.mesh = make_sphere_mesh(params.sphere_subdivisions, params.sphere_radius);
    auto radius = params.sphere_radius;
    // Meso height over the sphere via an area-preserving-ish wrap of the
    // planar bump pattern onto (azimuth, elevation) arc lengths.
    auto height = [bumps, radius](Vec3 dir) {
      auto az = std::atan2(dir.y, dir.x) * radius;
      auto el = std::asin(std::clamp(dir.z, -1.0, 1.0)) * radius;
      return bumps->eval({az, el});
    };
    scene.density = [height, radius, sigma_peak, tau](Vec3 x) {
      auto r = length(x);
      if (r < 1e-9) return sigma_peak;
      auto s = r - radius;
      return sigma_peak * smoothstep01((height(x / r) - s) / tau);
    };
    scene.color = [height, light, radius, amplitude](Vec3 x) {
      auto dir = normalize(x);
      const double eps = 1e-4;
      // Implicit surface F = (|x| - radius) - h(x/|x|); n = normalize(grad F).
      auto f = [&](Vec3 p) { return (length(p) - radius) - height(normalize(p)); };
      Vec3 grad = {(f(x + Vec3{eps, 0, 0}) - f(x - Vec3{eps, 0, 0})) / (2 * eps),
                   (f(x + Vec3{0, eps, 0}) - f(x - Vec3{0, eps, 0})) / (2 * eps),
                   (f(x + Vec3{0, 0, eps}) - f(x - Vec3{0, 0, eps})) / (2 * eps)};
      auto n = normalize(grad);
      auto az = std::atan2(dir.y, dir.x) * radius;
      auto el = std::asin(std::clamp(dir.z, -1.0, 1.0)) * radius;
      auto alb = albedo_pattern({az, el}, height(dir), amplitude);
      return clamp(alb * irradiance(light, n), 0.0, 1.0);
    };
  }

  // Camera ring around +z with one heldout view between train stations.
  auto target = Vec3{0, 0, plane ? 0.0 : 0.0};
  auto elevation = params.camera_elevation_deg * kPi / 180.0;
  auto distance = params.camera_distance * (plane ? 1.0 : 1.0 + params.sphere_radius);
  for (int v = 0; v <= params.views; v++) {
    bool heldout = v == params.views;
    auto az = heldout ? kPi / params.views : 2 * kPi * v / params.views;
    Vec3 pos = {distance * std::cos(elevation) * std::cos(az),
                distance * std::cos(elevation) * std::sin(az),
                distance * std::sin(elevation)};
    auto cam = Camera::look_at(pos, target, {0, 0, 1}, params.fov_deg, params.image_size,
                               params.image_size);
    cam.split = heldout ? "heldout" : "train";
    if (heldout) {
      cam.image_path = "heldout.png";
    } else {
      char name[64];
      std::snprintf(name, sizeof(name), "view_%03d.png", v);
      cam.image_path = name;
    }
    scene.cameras.push_back(cam);
  }

  // Ground truth by dense reference marching over the analytic shell.
  double band_lo, band_hi;
  if (plane) {
    band_lo = -4 * tau - 0.01;
    band_hi = amplitude + 4 * tau + 0.01;
  } else {
    band_lo = params.sphere_radius - 4 * tau - 0.02;
    band_hi = params.sphere_radius + amplitude + 4 * tau + 0.02;
  }

  scene.images.resize(scene.cameras.size());
  for (size_t ci = 0; ci < scene.cameras.size(); ci++) {
    auto& cam = scene.cameras[ci];
    Image img(cam.width, cam.height);
    parallel_for(0, cam.height, [&](int64_t y, int) {
      for (int x = 0; x < cam.width; x++) {
        auto dir = cam.ray_direction(x + 0.5, y + 0.5);
        double t0 = 0, t1 = 0;
        bool hit;
        if (plane) {
          // Slab band_lo <= z <= band_hi.
          if (std::abs(dir.z) < 1e-12) {
            hit = false;
          } else {
            auto ta = (band_lo - cam.position.z) / dir.z;
            auto tb = (band_hi - cam.position.z) / dir.z;
            t0 = std::max(0.0, std::min(ta, tb));
            t1 = std::max(ta, tb);
            hit = t1 > t0;
          }
        } else {
          // Spherical shell |p| <= band_hi.
          auto oc = cam.position;
          auto b = dot(oc, dir);
          auto c = dot(oc, oc) - band_hi * band_hi;
          auto disc = b * b - c;
          hit = disc > 0;
          if (hit) {
            t0 = std::max(0.0, -b - std::sqrt(disc));
            t1 = -b + std::sqrt(disc);
          }
        }
        Vec3 rgb{};
        if (hit)
          rgb = march_reference(scene.density, scene.color, cam.position, dir, t0, t1,
                                params.reference_samples, Vec3{});
        img.set_pixel(x, int(y), rgb);
      }
    });
    scene.images[ci] = std::move(img);
  }
  return scene;
}

void save_scene(const SyntheticScene& scene, const std::string& dir) {
  namespace fs = std::filesystem;
  fs::create_directories(dir);
  auto cams = scene.cameras;
  for (size_t i = 0; i < cams.size(); i++) {
    auto png_path = (fs::path(dir) / cams[i].image_path).string();
    write_png(scene.images[i], png_path);
    auto raw_path = png_path.substr(0, png_path.size() - 4) + ".nri";
    write_raw_image(scene.images[i], raw_path);
  }
  save_cameras(cams, (fs::path(dir) / "cameras.json").string());
  save_obj(scene.mesh, (fs::path(dir) / "base_mesh.obj").string());

  nlohmann::json manifest;
  manifest["kind"] = scene.params.kind;
  manifest["seed"] = scene.params.seed;
  manifest["views"] = scene.params.views;
  manifest["image_size"] = scene.params.image_size;
  manifest["amplitude"] = scene.params.amplitude;
  manifest["sigma_peak"] = scene.params.sigma_peak;
  manifest["transition"] = scene.params.transition;
  std::ofstream out(fs::path(dir) / "scene.json");
  out << manifest.dump(1) << "\n";
}

}  // namespace nrtx
