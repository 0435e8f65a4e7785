#include "nrtx/image.hpp"

#include <png.h>

#include <cmath>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <memory>
#include <stdexcept>

namespace nrtx {

void write_png(const Image& img, const std::string& path) {
  std::unique_ptr<FILE, int (*)(FILE*)> fp(std::fopen(path.c_str(), "wb"), &std::fclose);
  if (!fp) throw std::runtime_error("cannot write image: " + path);
  auto png = png_create_write_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
  auto info = png_create_info_struct(png);
  if (!png || !info) throw std::runtime_error("libpng init failed");
  if (setjmp(png_jmpbuf(png))) {
    png_destroy_write_struct(&png, &info);
    throw std::runtime_error("libpng write failed: " + path);
  }
  png_init_io(png, fp.get());
  png_set_IHDR(png, info, img.width, img.height, 8, PNG_COLOR_TYPE_RGB,
               PNG_INTERLACE_NONE, PNG_COMPRESSION_TYPE_DEFAULT, PNG_FILTER_TYPE_DEFAULT);
  png_write_info(png, info);
  std::vector<unsigned char> row(size_t(img.width) * 3);
  for (int y = 0; y < img.height; y++) {
    for (int x = 0; x < img.width; x++) {
      auto p = img.pixel(x, y);
      for (int c = 0; c < 3; c++) {
        auto v = std::clamp(double(p[c]), 0.0, 1.0);
        row[size_t(x) * 3 + c] = static_cast<unsigned char>(std::lround(v * 255.0));
      }
    }
    png_write_row(png, row.data());
  }
  png_write_end(png, nullptr);
  png_destroy_write_struct(&png, &info);
}

Image read_png(const std::string& path) {
  std::unique_ptr<FILE, int (*)(FILE*)> fp(std::fopen(path.c_str(), "rb"), &std::fclose);
  if (!fp) throw std::runtime_error("cannot open image: " + path);
  auto png = png_create_read_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
  auto info = png_create_info_struct(png);
  if (!png || !info) throw std::runtime_error("libpng init failed");
  if (setjmp(png_jmpbuf(png))) {
    png_destroy_read_struct(&png, &info, nullptr);
    throw std::runtime_error("libpng read failed: " + path);
  }
  png_init_io(png, fp.get());
  png_read_info(png, info);
  // Normalize everything to 8-bit RGB.
  png_set_strip_16(png);
  png_set_palette_to_rgb(png);
  png_set_expand_gray_1_2_4_to_8(png);
  if (png_get_color_type(png, info) == PNG_COLOR_TYPE_GRAY ||
      png_get_color_type(png, info) == PNG_COLOR_TYPE_GRAY_ALPHA)
    png_set_gray_to_rgb(png);
  png_set_strip_alpha(png);
  png_read_update_info(png, info);

  Image img(int(png_get_image_width(png, info)), int(png_get_image_height(png, info)));
  std::vector<unsigned char> row(size_t(img.width) * 3);
  for (int y = 0; y < img.height; y++) {
    png_read_row(png, row.data(), nullptr);
    for (int x = 0; x < img.width; x++)
      for (int c = 0; c < 3; c++)
        img.pixel(x, y)[c] = float(row[size_t(x) * 3 + c]) / 255.0f;
  }
  png_destroy_read_struct(&png, &info, nullptr);
  return img;
}

static constexpr char kRawMagic[8] = {'N', 'R', 'T', 'X', 'I', 'M', 'G', 0};

void write_raw_image(const Image& img, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write image: " + path);
  out.write(kRawMagic, 8);
  uint32_t wh[2] = {uint32_t(img.width), uint32_t(img.height)};
  out.write(reinterpret_cast<const char*>(wh), 8);
  out.write(reinterpret_cast<const char*>(img.data.data()),
            std::streamsize(img.data.size() * sizeof(float)));
  if (!out) throw std::runtime_error("short write: " + path);
}

Image read_raw_image(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open image: " + path);
  char magic[8];
  in.read(magic, 8);
  if (!in || std::memcmp(magic, kRawMagic, 8) != 0)
    throw std::runtime_error("not a raw image file: " + path);
  uint32_t wh[2];
  in.read(reinterpret_cast<char*>(wh), 8);
  Image img(int(wh[0]), int(wh[1]));
  in.read(reinterpret_cast<char*>(img.data.data()),
          std::streamsize(img.data.size() * sizeof(float)));
  if (!in) throw std::runtime_error("truncated raw image: " + path);
  return img;
}

double psnr(const Image& a, const Image& b) {
  if (a.width != b.width || a.height != b.height)
    throw std::invalid_argument("psnr: image size mismatch");
  double mse = 0;
  for (size_t i = 0; i < a.data.size(); i++) {
    double d = double(a.data[i]) - double(b.data[i]);
    mse += d * d;
  }
  mse /= double(a.data.size());
  if (mse <= 0) return 99.0;
  return std::min(99.0, 10.0 * std::log10(1.0 / mse));
}

}  // namespace nrtx
