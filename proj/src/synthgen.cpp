#include "alpr/synthgen.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numbers>

#include "alpr/recognizer.hpp"

namespace alpr::synth {

namespace {

uint8_t clamp_u8(double v) {
  if (v <= 0.0) return 0;
  if (v >= 255.0) return 255;
  return uint8_t(std::lround(v));
}

GlyphBitmap scale_nn(const GlyphBitmap& g, int h, int w) {
  GlyphBitmap out;
  out.width = w;
  out.height = h;
  out.bits.resize(size_t(w) * h);
  for (int y = 0; y < h; ++y) {
    const int sy = std::min(g.height - 1, y * g.height / h);
    for (int x = 0; x < w; ++x) {
      const int sx = std::min(g.width - 1, x * g.width / w);
      out.bits[size_t(y) * w + x] = g.bits[size_t(sy) * g.width + sx];
    }
  }
  return out;
}

GlyphBitmap tight_crop(const GlyphBitmap& g) {
  int minx = g.width, maxx = -1, miny = g.height, maxy = -1;
  for (int y = 0; y < g.height; ++y)
    for (int x = 0; x < g.width; ++x)
      if (g.test(x, y)) {
        minx = std::min(minx, x);
        maxx = std::max(maxx, x);
        miny = std::min(miny, y);
        maxy = std::max(maxy, y);
      }
  if (maxx < 0) return g;  // no ink
  GlyphBitmap out;
  out.width = maxx - minx + 1;
  out.height = maxy - miny + 1;
  out.bits.resize(size_t(out.width) * out.height);
  for (int y = 0; y < out.height; ++y)
    for (int x = 0; x < out.width; ++x)
      out.bits[size_t(y) * out.width + x] = g.test(x + minx, y + miny);
  return out;
}

void draw_bitmap(img::GrayImage& canvas, const GlyphBitmap& bm, int x0, int y0,
                 uint8_t fg) {
  for (int y = 0; y < bm.height; ++y)
    for (int x = 0; x < bm.width; ++x)
      if (bm.test(x, y)) {
        const int px = x0 + x, py = y0 + y;
        if (px >= 0 && py >= 0 && px < canvas.width && py < canvas.height)
          canvas.at(px, py) = fg;
      }
}

img::GrayImage rotate_bilinear(const img::GrayImage& src, double deg,
                               uint8_t fill) {
  const double th = deg * std::numbers::pi / 180.0;
  const double c = std::cos(th), s = std::sin(th);
  const double cx = (src.width - 1) / 2.0, cy = (src.height - 1) / 2.0;
  img::GrayImage out = img::GrayImage::filled(src.width, src.height, fill);
  for (int y = 0; y < src.height; ++y) {
    for (int x = 0; x < src.width; ++x) {
      // Inverse map: where does this output pixel come from.
      const double dx = x - cx, dy = y - cy;
      const double sx = c * dx + s * dy + cx;
      const double sy = -s * dx + c * dy + cy;
      if (sx < 0.0 || sy < 0.0 || sx > src.width - 1 || sy > src.height - 1)
        continue;
      const int x0 = int(sx), y0 = int(sy);
      const int x1 = std::min(x0 + 1, src.width - 1);
      const int y1 = std::min(y0 + 1, src.height - 1);
      const double wx = sx - x0, wy = sy - y0;
      const double top = src.at(x0, y0) * (1 - wx) + src.at(x1, y0) * wx;
      const double bot = src.at(x0, y1) * (1 - wx) + src.at(x1, y1) * wx;
      out.at(x, y) = clamp_u8(top * (1 - wy) + bot * wy);
    }
  }
  return out;
}

img::BBox rotate_box(const img::BBox& b, double deg, double cx, double cy,
                     int bound_w, int bound_h) {
  const double th = deg * std::numbers::pi / 180.0;
  const double c = std::cos(th), s = std::sin(th);
  double minx = 1e18, maxx = -1e18, miny = 1e18, maxy = -1e18;
  const double xs[2] = {double(b.x), double(b.right())};
  const double ys[2] = {double(b.y), double(b.bottom())};
  for (double px : xs) {
    for (double py : ys) {
      // Content moves forward under the image rotation.
      const double dx = px - cx, dy = py - cy;
      const double rx = c * dx - s * dy + cx;
      const double ry = s * dx + c * dy + cy;
      minx = std::min(minx, rx);
      maxx = std::max(maxx, rx);
      miny = std::min(miny, ry);
      maxy = std::max(maxy, ry);
    }
  }
  int x0 = std::max(0, int(std::floor(minx)));
  int y0 = std::max(0, int(std::floor(miny)));
  int x1 = std::min(bound_w, int(std::ceil(maxx)));
  int y1 = std::min(bound_h, int(std::ceil(maxy)));
  if (x1 <= x0) x1 = x0 + 1;
  if (y1 <= y0) y1 = y0 + 1;
  return {x0, y0, x1 - x0, y1 - y0};
}

void add_noise(img::GrayImage& im, double sigma, Rng& rng) {
  if (sigma <= 0.0) return;
  for (auto& p : im.data) p = clamp_u8(p + rng.normal(0.0, sigma));
}

img::GrayImage box_blur3(const img::GrayImage& src) {
  img::GrayImage out = src;
  for (int y = 0; y < src.height; ++y) {
    for (int x = 0; x < src.width; ++x) {
      int sum = 0;
      for (int dy = -1; dy <= 1; ++dy) {
        for (int dx = -1; dx <= 1; ++dx) {
          const int px = std::clamp(x + dx, 0, src.width - 1);
          const int py = std::clamp(y + dy, 0, src.height - 1);
          sum += src.at(px, py);
        }
      }
      out.at(x, y) = uint8_t((sum + 4) / 9);
    }
  }
  return out;
}

int contrast_separation(double contrast) {
  return int(std::lround(contrast * 150.0));
}

uint8_t foreground_for(uint8_t bg, img::Polarity pol, double contrast) {
  const int sep = contrast_separation(contrast);
  return pol == img::Polarity::DarkOnLight ? clamp_u8(bg - sep)
                                           : clamp_u8(bg + sep);
}

uint8_t sample_background(img::Polarity pol, Rng& rng) {
  return pol == img::Polarity::DarkOnLight ? uint8_t(170 + rng.below(51))
                                           : uint8_t(35 + rng.below(51));
}

}  // namespace

RenderedPlate render_plate(const PlateSpec& spec, uint64_t seed) {
  if (spec.text_template.empty()) throw InvalidArgument("empty text template");
  if (spec.plate_w <= 0 || spec.plate_h <= 0)
    throw InvalidArgument("bad plate size");
  if (spec.contrast < 0.2 || spec.contrast > 1.0)
    throw InvalidArgument("contrast outside [0.2, 1.0]");

  Rng rng(seed);
  RenderedPlate out;
  for (char t : spec.text_template) {
    if (t == 'L')
      out.text.push_back(ocr::label_to_char(10 + int(rng.below(25))));
    else if (t == 'D')
      out.text.push_back(ocr::label_to_char(int(rng.below(10))));
    else
      out.text.push_back(ocr::normalize_text(std::string(1, t))[0]);
  }

  const int n = int(out.text.size());
  const int char_h =
      std::max(3, int(std::lround(spec.plate_h * spec.char_height_ratio)));
  const int char_w = std::max(2, int(std::lround(char_h * 5.0 / 7.0)));
  const int total_w = n * char_w + (n - 1) * spec.spacing;
  if (total_w > spec.plate_w - 4)
    throw InvalidArgument("text wider than plate");

  const uint8_t bg = sample_background(spec.polarity, rng);
  const uint8_t fg = foreground_for(bg, spec.polarity, spec.contrast);

  out.image = img::GrayImage::filled(spec.plate_w, spec.plate_h, bg);
  int x = (spec.plate_w - total_w) / 2;
  const int y0 = (spec.plate_h - char_h) / 2;
  for (int i = 0; i < n; ++i) {
    const GlyphBitmap scaled =
        scale_nn(glyph_for_class(ocr::char_to_label(out.text[i])), char_h,
                 char_w);
    uint8_t glyph_fg = fg;
    if (i < int(spec.per_char_contrast.size()))
      glyph_fg = foreground_for(bg, spec.polarity, spec.per_char_contrast[i]);
    draw_bitmap(out.image, scaled, x, y0, glyph_fg);
    out.glyph_boxes.push_back({x, y0, char_w, char_h});
    x += char_w + spec.spacing;
  }

  if (spec.rotation_deg != 0.0) {
    out.image = rotate_bilinear(out.image, spec.rotation_deg, bg);
    const double cx = (spec.plate_w - 1) / 2.0, cy = (spec.plate_h - 1) / 2.0;
    for (auto& b : out.glyph_boxes)
      b = rotate_box(b, spec.rotation_deg, cx, cy, spec.plate_w, spec.plate_h);
  }
  add_noise(out.image, spec.noise_sigma, rng);
  if (spec.blur_radius > 0) out.image = box_blur3(out.image);
  return out;
}

SceneSample compose_scene(const RenderedPlate& plate, int scene_w, int scene_h,
                          uint64_t seed) {
  Rng rng(seed);
  SceneSample out;
  out.gt_text = plate.text;

  // Low-frequency background: bilinear blend of four seeded corners.
  const double c00 = 60 + double(rng.below(141));
  const double c10 = 60 + double(rng.below(141));
  const double c01 = 60 + double(rng.below(141));
  const double c11 = 60 + double(rng.below(141));
  out.scene = img::GrayImage::filled(scene_w, scene_h, 0);
  for (int y = 0; y < scene_h; ++y) {
    const double fy = scene_h > 1 ? double(y) / (scene_h - 1) : 0.0;
    for (int x = 0; x < scene_w; ++x) {
      const double fx = scene_w > 1 ? double(x) / (scene_w - 1) : 0.0;
      const double v = c00 * (1 - fx) * (1 - fy) + c10 * fx * (1 - fy) +
                       c01 * (1 - fx) * fy + c11 * fx * fy;
      out.scene.at(x, y) = clamp_u8(v);
    }
  }
  add_noise(out.scene, 6.0, rng);

  const int n_rects = 3 + int(rng.below(6));
  for (int i = 0; i < n_rects; ++i) {
    const int rw = 10 + int(rng.below(61));
    const int rh = 10 + int(rng.below(61));
    const int rx = int(rng.below(uint64_t(std::max(1, scene_w - rw))));
    const int ry = int(rng.below(uint64_t(std::max(1, scene_h - rh))));
    const uint8_t fill = uint8_t(40 + rng.below(171));
    const bool border = rng.chance(0.5);
    const uint8_t edge = uint8_t(255 - fill);
    for (int y = ry; y < ry + rh && y < scene_h; ++y)
      for (int x = rx; x < rx + rw && x < scene_w; ++x) {
        const bool on_border =
            y - ry < 2 || x - rx < 2 || ry + rh - 1 - y < 2 || rx + rw - 1 - x < 2;
        out.scene.at(x, y) = border && on_border ? edge : fill;
      }
  }

  const double s = rng.uniform(0.5, 1.5);
  const int tw = std::max(1, int(std::lround(plate.image.width * s)));
  const int th = std::max(1, int(std::lround(plate.image.height * s)));
  if (tw > scene_w || th > scene_h)
    throw InvalidArgument("plate cannot fit in scene");
  const img::GrayImage scaled = img::resize_bilinear(plate.image, tw, th);

  const int px = int(rng.below(uint64_t(scene_w - tw + 1)));
  const int py = int(rng.below(uint64_t(scene_h - th + 1)));
  for (int y = 0; y < th; ++y)
    for (int x = 0; x < tw; ++x) out.scene.at(px + x, py + y) = scaled.at(x, y);
  out.gt_box = {px, py, tw, th};

  const double sx = double(tw) / plate.image.width;
  const double sy = double(th) / plate.image.height;
  for (const auto& b : plate.glyph_boxes) {
    const int x0 = int(std::lround(b.x * sx));
    const int y0 = int(std::lround(b.y * sy));
    const int x1 = std::max(x0 + 1, int(std::lround(b.right() * sx)));
    const int y1 = std::max(y0 + 1, int(std::lround(b.bottom() * sy)));
    out.glyph_boxes.push_back({x0, y0, x1 - x0, y1 - y0});
  }
  return out;
}

PlateSpec sample_plate_spec(Rng& rng, const std::string& tier) {
  static const char* kTemplates[4] = {"LLLDDD", "DDDLLL", "LLDDDD", "LDDDLL"};
  PlateSpec spec;
  spec.text_template = kTemplates[rng.below(4)];
  spec.polarity = rng.chance(0.85) ? img::Polarity::DarkOnLight
                                   : img::Polarity::LightOnDark;
  // Worst case must fit the 192-wide plate: six 23-px glyphs plus five
  // 10-px gaps is 188 = plate_w - 4.
  spec.spacing = rng.uniform_int(7, 10);
  spec.char_height_ratio = rng.uniform(0.42, 0.50);
  if (tier == "moderate") {
    spec.contrast = rng.uniform(0.50, 0.90);
    spec.rotation_deg = rng.uniform(-5.0, 5.0);
    spec.noise_sigma = rng.uniform(8.0, 16.0);
    spec.blur_radius = rng.chance(0.5) ? 1 : 0;
  } else if (tier == "lowcontrast") {
    spec.contrast = rng.uniform(0.22, 0.38);
    spec.rotation_deg = rng.uniform(-3.0, 3.0);
    spec.noise_sigma = rng.uniform(0.0, 5.0);
  } else {
    spec.contrast = rng.uniform(0.70, 1.0);
    spec.rotation_deg = rng.uniform(-2.0, 2.0);
    spec.noise_sigma = rng.uniform(0.0, 5.0);
  }
  return spec;
}

namespace {

// Mini-canvas render of one bitmap with the full jitter range, cropped and
// normalized exactly like an inference-time patch.
nnet::Tensor render_patch(const GlyphBitmap& bitmap, Rng& rng) {
  const int char_h = rng.uniform_int(16, 26);
  const int char_w = std::max(
      2, int(std::lround(char_h * double(bitmap.width) / bitmap.height)));
  const int cw = char_w + 14, ch = char_h + 12;

  const img::Polarity pol = rng.chance(0.5) ? img::Polarity::DarkOnLight
                                            : img::Polarity::LightOnDark;
  const double contrast = rng.uniform(0.4, 1.0);
  const uint8_t bg = sample_background(pol, rng);
  const uint8_t fg = foreground_for(bg, pol, contrast);

  img::GrayImage canvas = img::GrayImage::filled(cw, ch, bg);
  const int gx = (cw - char_w) / 2, gy = (ch - char_h) / 2;
  draw_bitmap(canvas, scale_nn(bitmap, char_h, char_w), gx, gy, fg);
  img::BBox box{gx, gy, char_w, char_h};

  const double rot = rng.uniform(-5.0, 5.0);
  canvas = rotate_bilinear(canvas, rot, bg);
  box = rotate_box(box, rot, (cw - 1) / 2.0, (ch - 1) / 2.0, cw, ch);
  add_noise(canvas, rng.uniform(1.0, 8.0), rng);
  if (rng.chance(0.2)) canvas = box_blur3(canvas);

  // Segment boxes at test time are tight component boxes, so jitter the
  // crop a little to cover that variation.
  box.x += rng.uniform_int(-2, 2);
  box.y += rng.uniform_int(-2, 2);
  box.w = std::max(3, box.w + rng.uniform_int(-2, 2));
  box.h = std::max(3, box.h + rng.uniform_int(-2, 2));
  box.x = std::clamp(box.x, 0, cw - 3);
  box.y = std::clamp(box.y, 0, ch - 3);
  return ocr::prepare_patch(canvas, box);
}

nnet::Tensor render_background_patch(Rng& rng) {
  const int cw = rng.uniform_int(26, 40), ch = rng.uniform_int(26, 40);
  const img::Polarity pol = rng.chance(0.5) ? img::Polarity::DarkOnLight
                                            : img::Polarity::LightOnDark;
  img::GrayImage canvas =
      img::GrayImage::filled(cw, ch, sample_background(pol, rng));
  // Occasional plate-edge-like stripe so the filter sees structure too.
  if (rng.chance(0.4)) {
    const int sy = rng.uniform_int(0, ch - 3);
    const uint8_t v = uint8_t(rng.below(256));
    for (int y = sy; y < std::min(ch, sy + 3); ++y)
      for (int x = 0; x < cw; ++x) canvas.at(x, y) = v;
  }
  add_noise(canvas, rng.uniform(2.0, 10.0), rng);
  img::BBox box;
  box.w = rng.uniform_int(12, 22);
  box.h = rng.uniform_int(12, 22);
  box.x = rng.uniform_int(0, cw - box.w);
  box.y = rng.uniform_int(0, ch - box.h);
  return ocr::prepare_patch(canvas, box);
}

GlyphBitmap half_glyph(const GlyphBitmap& g, int which) {
  GlyphBitmap out = g;
  for (int y = 0; y < g.height; ++y)
    for (int x = 0; x < g.width; ++x) {
      const bool keep = which == 0   ? x < g.width / 2
                        : which == 1 ? x >= g.width - g.width / 2
                        : which == 2 ? y < g.height / 2
                                     : y >= g.height - g.height / 2;
      if (!keep) out.bits[size_t(y) * g.width + x] = 0;
    }
  const GlyphBitmap cropped = tight_crop(out);
  bool any = false;
  for (uint8_t b : cropped.bits) any |= b != 0;
  return any ? cropped : g;
}

}  // namespace

LabeledPatches make_char_dataset(int n_per_class, uint64_t seed) {
  if (n_per_class < 1) throw InvalidArgument("need at least one patch per class");
  const Rng root(seed);
  LabeledPatches out;
  out.patches.reserve(size_t(n_per_class) * 35);
  for (int c = 0; c < 35; ++c) {
    for (int j = 0; j < n_per_class; ++j) {
      Rng rng = root.fork(0x10000000ull + uint64_t(c) * 1000003ull + j);
      out.patches.push_back(render_patch(glyph_for_class(c), rng));
      out.labels.push_back(c);
    }
  }
  return out;
}

std::vector<nnet::Tensor> make_negative_dataset(int n, uint64_t seed) {
  if (n < 1) throw InvalidArgument("need at least one negative");
  const Rng root(seed);
  std::vector<nnet::Tensor> out;
  out.reserve(size_t(n));
  for (int j = 0; j < n; ++j) {
    Rng rng = root.fork(0x20000000ull + uint64_t(j));
    switch (j % 3) {
      case 0:
        out.push_back(render_background_patch(rng));
        break;
      case 1: {
        const int cls = int(rng.below(35));
        const int which = int(rng.below(4));
        out.push_back(render_patch(half_glyph(glyph_for_class(cls), which), rng));
        break;
      }
      default:
        out.push_back(render_patch(symbol_bitmap(int(rng.below(kSymbolCount))), rng));
        break;
    }
  }
  return out;
}

std::vector<SceneSample> make_benchmark(int n, uint64_t seed) {
  if (n < 1) throw InvalidArgument("need at least one scene");
  const int n_low = n / 10;
  const int n_mod = n / 5;
  const int n_clean = n - n_low - n_mod;
  const Rng root(seed);
  std::vector<SceneSample> out;
  out.reserve(size_t(n));
  for (int i = 0; i < n; ++i) {
    const std::string tier = i < n_clean            ? kTiers[0]
                             : i < n_clean + n_mod  ? kTiers[1]
                                                    : kTiers[2];
    Rng rng = root.fork(0x30000000ull + uint64_t(i));
    const PlateSpec spec = sample_plate_spec(rng, tier);
    const RenderedPlate plate = render_plate(spec, rng.next());
    SceneSample sample = compose_scene(plate, kSceneWidth, kSceneHeight, rng.next());
    sample.tier = tier;
    out.push_back(std::move(sample));
  }
  return out;
}

void write_benchmark(const std::vector<SceneSample>& samples,
                     const std::filesystem::path& dir) {
  std::error_code ec;
  std::filesystem::create_directories(dir / "scenes", ec);
  if (ec) throw IoError("cannot create " + (dir / "scenes").string());

  std::ofstream manifest(dir / "manifest.tsv", std::ios::binary);
  if (!manifest) throw IoError("cannot write " + (dir / "manifest.tsv").string());
  char name[32];
  for (size_t i = 0; i < samples.size(); ++i) {
    std::snprintf(name, sizeof name, "scenes/%04zu.pgm", i);
    img::write_pgm(samples[i].scene, dir / name);
    const auto& b = samples[i].gt_box;
    manifest << name << '\t' << b.x << '\t' << b.y << '\t' << b.w << '\t'
             << b.h << '\t' << samples[i].gt_text << '\t' << samples[i].tier
             << '\n';
  }
  if (!manifest) throw IoError("manifest write failed");
}

WindowSet make_detector_windows(
    const std::vector<std::pair<img::GrayImage, img::BBox>>& annotated,
    int win_h, int win_w, uint64_t seed) {
  const Rng root(seed);
  WindowSet out;

  for (size_t i = 0; i < annotated.size(); ++i) {
    const auto& [scene, gt] = annotated[i];
    Rng rng = root.fork(0x40000000ull + uint64_t(i));

    auto add = [&](img::BBox b, int label) {
      b.x = std::clamp(b.x, 0, scene.width - 1);
      b.y = std::clamp(b.y, 0, scene.height - 1);
      b.w = std::min(b.w, scene.width - b.x);
      b.h = std::min(b.h, scene.height - b.y);
      if (b.w < 8 || b.h < 4) return false;
      const img::GrayImage window =
          img::resize_bilinear(img::crop(scene, b), win_w, win_h);
      out.windows.push_back(ocr::to_tensor(window));
      out.labels.push_back(label);
      return true;
    };

    add(gt, 1);
    for (int k = 0; k < 3; ++k) {
      const double sw = rng.uniform(0.92, 1.10), sh = rng.uniform(0.92, 1.10);
      const int w = std::max(8, int(std::lround(gt.w * sw)));
      const int h = std::max(4, int(std::lround(gt.h * sh)));
      const int cx = gt.x + gt.w / 2 + int(std::lround(gt.w * rng.uniform(-0.06, 0.06)));
      const int cy = gt.y + gt.h / 2 + int(std::lround(gt.h * rng.uniform(-0.10, 0.10)));
      add({cx - w / 2, cy - h / 2, w, h}, 1);
    }

    int negatives = 0;
    for (int tries = 0; negatives < 8 && tries < 80; ++tries) {
      const double u = rng.uniform(0.4, 1.6);
      const int w = int(std::lround(win_w * u * rng.uniform(0.85, 1.2)));
      const int h = int(std::lround(win_h * u * rng.uniform(0.85, 1.2)));
      if (w >= scene.width || h >= scene.height || w < 8 || h < 4) continue;
      const img::BBox b{int(rng.below(uint64_t(scene.width - w))),
                        int(rng.below(uint64_t(scene.height - h))), w, h};
      if (img::iou(b, gt) >= 0.15) continue;
      if (add(b, 0)) negatives++;
    }
    for (int k = 0; k < 2; ++k) {
      // Near misses sharpen localization.
      const int dx = int(std::lround(gt.w * rng.uniform(0.35, 0.8))) *
                     (rng.chance(0.5) ? 1 : -1);
      const int dy = int(std::lround(gt.h * rng.uniform(0.35, 0.8))) *
                     (rng.chance(0.5) ? 1 : -1);
      const img::BBox b{gt.x + dx, gt.y + dy, gt.w, gt.h};
      if (img::iou(b, gt) < 0.35) add(b, 0);
    }
  }
  return out;
}

}  // namespace alpr::synth
