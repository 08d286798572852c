#include "alpr/image.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <fstream>
#include <string>

namespace alpr::img {

namespace {

uint8_t clamp_u8(double v) {
  if (v <= 0.0) return 0;
  if (v >= 255.0) return 255;
  return uint8_t(std::lround(v));
}

}  // namespace

GrayImage GrayImage::filled(int w, int h, uint8_t v) {
  GrayImage out;
  out.width = w;
  out.height = h;
  out.data.assign(size_t(w) * h, v);
  return out;
}

BitMask BitMask::zeros(int w, int h) {
  BitMask m;
  m.width = w;
  m.height = h;
  m.bits.assign(size_t(w) * h, 0);
  return m;
}

int BitMask::count() const {
  int n = 0;
  for (uint8_t b : bits) n += b;
  return n;
}

GrayImage to_grayscale(const RgbImage& rgb) {
  GrayImage out;
  out.width = rgb.width;
  out.height = rgb.height;
  out.data.resize(size_t(rgb.width) * rgb.height);
  for (size_t i = 0; i < out.data.size(); ++i) {
    const double r = rgb.data[3 * i + 0];
    const double g = rgb.data[3 * i + 1];
    const double b = rgb.data[3 * i + 2];
    out.data[i] = clamp_u8(0.299 * r + 0.587 * g + 0.114 * b);
  }
  return out;
}

GrayImage to_grayscale(const GrayImage& r, const GrayImage& g,
                       const GrayImage& b) {
  if (r.width != g.width || r.width != b.width || r.height != g.height ||
      r.height != b.height)
    throw InvalidArgument("channel dimensions differ");
  GrayImage out;
  out.width = r.width;
  out.height = r.height;
  out.data.resize(r.data.size());
  for (size_t i = 0; i < out.data.size(); ++i)
    out.data[i] =
        clamp_u8(0.299 * r.data[i] + 0.587 * g.data[i] + 0.114 * b.data[i]);
  return out;
}

GrayImage resize_bilinear(const GrayImage& src, int w, int h) {
  if (w <= 0 || h <= 0) throw InvalidArgument("zero target dimension");
  if (src.empty()) throw InvalidArgument("empty source image");
  if (w == src.width && h == src.height) return src;

  GrayImage out;
  out.width = w;
  out.height = h;
  out.data.resize(size_t(w) * h);

  const double sx = double(src.width) / w;
  const double sy = double(src.height) / h;
  for (int y = 0; y < h; ++y) {
    double fy = (y + 0.5) * sy - 0.5;
    fy = std::clamp(fy, 0.0, double(src.height - 1));
    const int y0 = int(fy);
    const int y1 = std::min(y0 + 1, src.height - 1);
    const double wy = fy - y0;
    for (int x = 0; x < w; ++x) {
      double fx = (x + 0.5) * sx - 0.5;
      fx = std::clamp(fx, 0.0, double(src.width - 1));
      const int x0 = int(fx);
      const int x1 = std::min(x0 + 1, src.width - 1);
      const double wx = fx - x0;
      const double top = src.at(x0, y0) * (1.0 - wx) + src.at(x1, y0) * wx;
      const double bot = src.at(x0, y1) * (1.0 - wx) + src.at(x1, y1) * wx;
      out.at(x, y) = clamp_u8(top * (1.0 - wy) + bot * wy);
    }
  }
  return out;
}

int otsu_threshold(const GrayImage& img) {
  if (img.empty()) throw InvalidArgument("empty image");
  std::array<uint64_t, 256> hist{};
  for (uint8_t v : img.data) hist[v]++;

  int distinct = 0;
  for (uint64_t c : hist) distinct += c > 0;
  if (distinct < 2) throw DegenerateInput("constant image has no threshold");

  // All sums below are exact in 64-bit integers, so the variance values are
  // reproducible regardless of accumulation strategy.
  const uint64_t total = img.data.size();
  uint64_t total_sum = 0;
  for (int v = 0; v < 256; ++v) total_sum += hist[v] * uint64_t(v);

  int best_t = 0;
  double best_var = -1.0;
  uint64_t cnt0 = 0, sum0 = 0;
  for (int t = 0; t <= 254; ++t) {
    cnt0 += hist[t];
    sum0 += hist[t] * uint64_t(t);
    const uint64_t cnt1 = total - cnt0;
    if (cnt0 == 0 || cnt1 == 0) {
      if (best_var < 0.0) {
        best_var = 0.0;
        best_t = t;
      }
      continue;
    }
    const double mu0 = double(sum0) / double(cnt0);
    const double mu1 = double(total_sum - sum0) / double(cnt1);
    const double d = mu0 - mu1;
    const double var = double(cnt0) * double(cnt1) * d * d;
    if (var > best_var) {
      best_var = var;
      best_t = t;
    }
  }
  return best_t;
}

BitMask binarize(const GrayImage& img, int t, Polarity p) {
  if (t < 0 || t > 254) throw InvalidArgument("threshold out of range");
  BitMask m = BitMask::zeros(img.width, img.height);
  if (p == Polarity::DarkOnLight) {
    for (size_t i = 0; i < img.data.size(); ++i) m.bits[i] = img.data[i] <= t;
  } else {
    for (size_t i = 0; i < img.data.size(); ++i) m.bits[i] = img.data[i] > t;
  }
  return m;
}

std::vector<Component> connected_components(const BitMask& mask) {
  std::vector<Component> out;
  if (mask.width <= 0 || mask.height <= 0) return out;

  std::vector<uint8_t> seen(mask.bits.size(), 0);
  std::vector<std::pair<int, int>> stack;

  for (int y = 0; y < mask.height; ++y) {
    for (int x = 0; x < mask.width; ++x) {
      const size_t idx = size_t(y) * mask.width + x;
      if (!mask.bits[idx] || seen[idx]) continue;
      Component c;
      int minx = x, maxx = x, miny = y, maxy = y;
      seen[idx] = 1;
      stack.clear();
      stack.emplace_back(x, y);
      while (!stack.empty()) {
        auto [px, py] = stack.back();
        stack.pop_back();
        c.pixels.emplace_back(px, py);
        minx = std::min(minx, px);
        maxx = std::max(maxx, px);
        miny = std::min(miny, py);
        maxy = std::max(maxy, py);
        for (int dy = -1; dy <= 1; ++dy) {
          for (int dx = -1; dx <= 1; ++dx) {
            if (dx == 0 && dy == 0) continue;
            const int nx = px + dx, ny = py + dy;
            if (nx < 0 || ny < 0 || nx >= mask.width || ny >= mask.height)
              continue;
            const size_t nidx = size_t(ny) * mask.width + nx;
            if (mask.bits[nidx] && !seen[nidx]) {
              seen[nidx] = 1;
              stack.emplace_back(nx, ny);
            }
          }
        }
      }
      c.area = int(c.pixels.size());
      c.bbox = {minx, miny, maxx - minx + 1, maxy - miny + 1};
      out.push_back(std::move(c));
    }
  }

  std::sort(out.begin(), out.end(), [](const Component& a, const Component& b) {
    return std::tuple(a.bbox.x, a.bbox.y, a.bbox.w, a.bbox.h, a.area) <
           std::tuple(b.bbox.x, b.bbox.y, b.bbox.w, b.bbox.h, b.area);
  });
  return out;
}

double iou(const BBox& a, const BBox& b) {
  const int ix0 = std::max(a.x, b.x);
  const int iy0 = std::max(a.y, b.y);
  const int ix1 = std::min(a.right(), b.right());
  const int iy1 = std::min(a.bottom(), b.bottom());
  if (ix1 <= ix0 || iy1 <= iy0) return 0.0;
  const long long inter = 1ll * (ix1 - ix0) * (iy1 - iy0);
  const long long uni = a.area() + b.area() - inter;
  return double(inter) / double(uni);
}

GrayImage crop(const GrayImage& img, const BBox& b) {
  const int x0 = std::max(b.x, 0);
  const int y0 = std::max(b.y, 0);
  const int x1 = std::min(b.right(), img.width);
  const int y1 = std::min(b.bottom(), img.height);
  if (x1 <= x0 || y1 <= y0) throw InvalidArgument("crop box outside image");
  GrayImage out;
  out.width = x1 - x0;
  out.height = y1 - y0;
  out.data.resize(size_t(out.width) * out.height);
  for (int y = y0; y < y1; ++y)
    std::copy(img.data.begin() + size_t(y) * img.width + x0,
              img.data.begin() + size_t(y) * img.width + x1,
              out.data.begin() + size_t(y - y0) * out.width);
  return out;
}

namespace {

// Netpbm header token: skips whitespace and '#' comments.
std::string next_token(std::istream& in) {
  std::string tok;
  int c = in.get();
  while (c != EOF) {
    if (c == '#') {
      while (c != EOF && c != '\n') c = in.get();
    } else if (std::isspace(c)) {
      c = in.get();
    } else {
      break;
    }
  }
  while (c != EOF && !std::isspace(c)) {
    tok.push_back(char(c));
    c = in.get();
  }
  return tok;
}

int parse_dim(const std::string& tok, const char* what,
              const std::filesystem::path& path) {
  if (tok.empty() || tok.find_first_not_of("0123456789") != std::string::npos)
    throw IoError("bad " + std::string(what) + " in " + path.string());
  const long v = std::stol(tok);
  if (v <= 0 || v > 1 << 20)
    throw IoError("bad " + std::string(what) + " in " + path.string());
  return int(v);
}

void read_netpbm(const std::filesystem::path& path, const char* magic,
                 int channels, int& w, int& h, std::vector<uint8_t>& data) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path.string());
  char m0 = 0, m1 = 0;
  in.get(m0);
  in.get(m1);
  if (m0 != magic[0] || m1 != magic[1])
    throw IoError("not a " + std::string(magic) + " file: " + path.string());
  w = parse_dim(next_token(in), "width", path);
  h = parse_dim(next_token(in), "height", path);
  const int maxval = parse_dim(next_token(in), "maxval", path);
  if (maxval != 255) throw IoError("unsupported maxval in " + path.string());
  data.resize(size_t(w) * h * channels);
  in.read(reinterpret_cast<char*>(data.data()),
          std::streamsize(data.size()));
  if (in.gcount() != std::streamsize(data.size()))
    throw IoError("truncated pixel data in " + path.string());
}

}  // namespace

GrayImage read_pgm(const std::filesystem::path& path) {
  GrayImage img;
  read_netpbm(path, "P5", 1, img.width, img.height, img.data);
  return img;
}

void write_pgm(const GrayImage& img, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write " + path.string());
  out << "P5\n" << img.width << " " << img.height << "\n255\n";
  out.write(reinterpret_cast<const char*>(img.data.data()),
            std::streamsize(img.data.size()));
  if (!out) throw IoError("write failed: " + path.string());
}

RgbImage read_ppm(const std::filesystem::path& path) {
  RgbImage img;
  read_netpbm(path, "P6", 3, img.width, img.height, img.data);
  return img;
}

void write_ppm(const RgbImage& img, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write " + path.string());
  out << "P6\n" << img.width << " " << img.height << "\n255\n";
  out.write(reinterpret_cast<const char*>(img.data.data()),
            std::streamsize(img.data.size()));
  if (!out) throw IoError("write failed: " + path.string());
}

GrayImage read_image(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path.string());
  char m0 = 0, m1 = 0;
  in.get(m0);
  in.get(m1);
  in.close();
  if (m0 == 'P' && m1 == '5') return read_pgm(path);
  if (m0 == 'P' && m1 == '6') return to_grayscale(read_ppm(path));
  throw IoError("unsupported image format: " + path.string());
}

}  // namespace alpr::img
