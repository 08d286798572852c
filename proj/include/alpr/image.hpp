#pragma once

#include <cstdint>
#include <filesystem>
#include <utility>
#include <vector>

#include "alpr/errors.hpp"

namespace alpr::img {

/// 8-bit single-channel raster, row-major. The pixel currency of the toolkit.
struct GrayImage {
  int width = 0;
  int height = 0;
  std::vector<uint8_t> data;  // width * height values

  static GrayImage filled(int w, int h, uint8_t v);

  uint8_t at(int x, int y) const { return data[size_t(y) * width + x]; }
  uint8_t& at(int x, int y) { return data[size_t(y) * width + x]; }
  bool empty() const { return width <= 0 || height <= 0; }
  bool operator==(const GrayImage&) const = default;
};

/// Axis-aligned box; (x, y) is the top-left corner, right/bottom exclusive.
struct BBox {
  int x = 0;
  int y = 0;
  int w = 0;
  int h = 0;

  long long area() const { return 1ll * w * h; }
  int right() const { return x + w; }
  int bottom() const { return y + h; }
  bool operator==(const BBox&) const = default;
};

struct BitMask {
  int width = 0;
  int height = 0;
  std::vector<uint8_t> bits;  // 0/1 per pixel, row-major

  static BitMask zeros(int w, int h);

  bool test(int x, int y) const { return bits[size_t(y) * width + x] != 0; }
  void set(int x, int y, bool v = true) {
    bits[size_t(y) * width + x] = v ? 1 : 0;
  }
  int count() const;
  bool operator==(const BitMask&) const = default;
};

enum class Polarity : uint8_t { DarkOnLight, LightOnDark };

struct RgbImage {
  int width = 0;
  int height = 0;
  std::vector<uint8_t> data;  // interleaved r,g,b
};

/// Rec. 601 luma, rounded to nearest.
GrayImage to_grayscale(const RgbImage& rgb);
/// Planar variant; throws InvalidArgument when plane dimensions differ.
GrayImage to_grayscale(const GrayImage& r, const GrayImage& g,
                       const GrayImage& b);

/// Bilinear resize with half-pixel-center mapping and clamp-to-edge.
/// Resizing to the same size reproduces the input exactly.
GrayImage resize_bilinear(const GrayImage& src, int w, int h);

/// Otsu's threshold in [0, 254], maximizing between-class variance of the
/// split at <=t / >t; ties broken toward the smallest t. Throws
/// DegenerateInput for a constant image.
int otsu_threshold(const GrayImage& img);

/// DarkOnLight sets bits where pixel <= t; LightOnDark where pixel > t.
BitMask binarize(const GrayImage& img, int t, Polarity p);

struct Component {
  BBox bbox;
  int area = 0;  // pixel count
  std::vector<std::pair<int, int>> pixels;  // (x, y)
};

/// 8-connected components of set bits, ordered by (bbox.x, bbox.y).
std::vector<Component> connected_components(const BitMask& mask);

double iou(const BBox& a, const BBox& b);

/// Box is clamped to the image; throws InvalidArgument if fully outside.
GrayImage crop(const GrayImage& img, const BBox& b);

// Netpbm I/O: binary P5 graymaps and P6 pixmaps, maxval 255.
GrayImage read_pgm(const std::filesystem::path& path);
void write_pgm(const GrayImage& img, const std::filesystem::path& path);
RgbImage read_ppm(const std::filesystem::path& path);
void write_ppm(const RgbImage& img, const std::filesystem::path& path);

/// Loads either format by magic; P6 is converted to grayscale.
GrayImage read_image(const std::filesystem::path& path);

}  // namespace alpr::img
