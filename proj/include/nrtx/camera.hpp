#pragma once

#include <string>
#include <vector>

#include "nrtx/math.hpp"

namespace nrtx {

// Pinhole camera. Camera space: x right, y down, z forward; `rotation`
// columns are the camera axes in world space and `position` is the center.
struct Camera {
  double fx = 0, fy = 0, cx = 0, cy = 0;
  int width = 0, height = 0;
  Mat3 rotation;
  Vec3 position;
  std::string image_path;
  std::string split = "train";

  void validate() const;  // throws std::invalid_argument

  // Ray through the pixel-center coordinate (u, v); u = column + 0.5.
  Vec3 ray_direction(double u, double v) const {
    Vec3 cam = {(u - cx) / fx, (v - cy) / fy, 1.0};
    return normalize(rotation * cam);
  }

  Vec3 forward() const { return rotation.col(2); }

  static Camera look_at(Vec3 position, Vec3 target, Vec3 up, double fov_y_deg, int width,
                        int height);
};

// Cameras JSON: {"cameras": [{width, height, fx, fy, cx, cy,
// pose (16 numbers, row-major world-from-camera), image, split}]}.
std::vector<Camera> load_cameras(const std::string& path);
void save_cameras(const std::vector<Camera>& cams, const std::string& path);

}  // namespace nrtx
