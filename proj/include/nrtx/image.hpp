#pragma once

#include <string>
#include <vector>

#include "nrtx/math.hpp"

namespace nrtx {

// Float RGB image, row-major, top row first, values nominally in [0,1].
struct Image {
  int width = 0, height = 0;
  std::vector<float> data;  // 3 floats per pixel

  Image() = default;
  Image(int w, int h) : width(w), height(h), data(size_t(w) * h * 3, 0.f) {}

  float* pixel(int x, int y) { return data.data() + (size_t(y) * width + x) * 3; }
  const float* pixel(int x, int y) const {
    return data.data() + (size_t(y) * width + x) * 3;
  }
  void set_pixel(int x, int y, Vec3 c) {
    auto p = pixel(x, y);
    p[0] = float(c.x); p[1] = float(c.y); p[2] = float(c.z);
  }
  Vec3 get_pixel(int x, int y) const {
    auto p = pixel(x, y);
    return {p[0], p[1], p[2]};
  }
};

// 8-bit PNG; values clamped to [0,1] and quantized on write.
void write_png(const Image& img, const std::string& path);
Image read_png(const std::string& path);

// Raw float dump ("NRTXIMG" header + u32 w,h + f32 RGB) used for losses.
void write_raw_image(const Image& img, const std::string& path);
Image read_raw_image(const std::string& path);

// Peak 1.0; identical images report the 99.0 sentinel.
double psnr(const Image& a, const Image& b);

}  // namespace nrtx
