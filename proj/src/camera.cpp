#include "nrtx/camera.hpp"

#include <fstream>
#include <stdexcept>

#include <json.hpp>

namespace nrtx {

void Camera::validate() const {
  if (fx <= 0 || fy <= 0) throw std::invalid_argument("camera: focal must be positive");
  if (width <= 0 || height <= 0)
    throw std::invalid_argument("camera: size must be positive");
  auto r = rotation;
  auto rt_r = transpose(r) * r;
  for (int i = 0; i < 3; i++)
    for (int j = 0; j < 3; j++) {
      auto expect = i == j ? 1.0 : 0.0;
      if (std::abs(rt_r(i, j) - expect) > 1e-6)
        throw std::invalid_argument("camera: pose rotation is not orthonormal");
    }
}

Camera Camera::look_at(Vec3 position, Vec3 target, Vec3 up, double fov_y_deg, int width,
                       int height) {
  Camera cam;
  cam.width = width;
  cam.height = height;
  cam.cx = width / 2.0;
  cam.cy = height / 2.0;
  cam.fy = height / (2.0 * std::tan(fov_y_deg * kPi / 180.0 / 2.0));
  cam.fx = cam.fy;
  cam.position = position;
  auto z = normalize(target - position);          // forward
  auto x = normalize(cross(z, up));               // right (y points down)
  auto y = cross(z, x);
  cam.rotation = Mat3::from_columns(x, y, z);
  return cam;
}

std::vector<Camera> load_cameras(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::invalid_argument("cannot open cameras file: " + path);
  nlohmann::json j;
  try {
    in >> j;
  } catch (const std::exception& e) {
    throw std::invalid_argument("cameras json parse error: " + std::string(e.what()));
  }
  if (!j.contains("cameras") || !j["cameras"].is_array())
    throw std::invalid_argument(path + ": missing 'cameras' array");
  std::vector<Camera> cams;
  for (auto& e : j["cameras"]) {
    Camera c;
    c.fx = e.at("fx").get<double>();
    c.fy = e.at("fy").get<double>();
    c.cx = e.at("cx").get<double>();
    c.cy = e.at("cy").get<double>();
    c.width = e.at("width").get<int>();
    c.height = e.at("height").get<int>();
    auto pose = e.at("pose");
    if (!pose.is_array() || pose.size() != 16)
      throw std::invalid_argument(path + ": pose must have 16 entries");
    // Row-major 4x4; rotation block in rows 0..2, translation in column 3.
    for (int r = 0; r < 3; r++)
      for (int col = 0; col < 3; col++) c.rotation(r, col) = pose[r * 4 + col].get<double>();
    c.position = {pose[3].get<double>(), pose[7].get<double>(), pose[11].get<double>()};
    if (e.contains("image")) c.image_path = e["image"].get<std::string>();
    if (e.contains("split")) c.split = e["split"].get<std::string>();
    c.validate();
    cams.push_back(c);
  }
  return cams;
}

void save_cameras(const std::vector<Camera>& cams, const std::string& path) {
  nlohmann::json j;
  j["cameras"] = nlohmann::json::array();
  for (auto& c : cams) {
    nlohmann::json e;
    e["fx"] = c.fx;
    e["fy"] = c.fy;
    e["cx"] = c.cx;
    e["cy"] = c.cy;
    e["width"] = c.width;
    e["height"] = c.height;
    std::vector<double> pose(16, 0.0);
    for (int r = 0; r < 3; r++) {
      for (int col = 0; col < 3; col++) pose[r * 4 + col] = c.rotation(r, col);
      pose[r * 4 + 3] = c.position[r];
    }
    pose[15] = 1.0;
    e["pose"] = pose;
    e["image"] = c.image_path;
    e["split"] = c.split;
    j["cameras"].push_back(e);
  }
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write cameras file: " + path);
  out << j.dump(1) << "\n";
}

}  // namespace nrtx
