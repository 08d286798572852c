#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "alpr/image.hpp"
#include "alpr/rng.hpp"
#include "alpr/tensor.hpp"

namespace alpr::synth {

/// Monochrome glyph bitmap at base resolution (7 rows x 5 columns for the
/// embedded font).
struct GlyphBitmap {
  int width = 0;
  int height = 0;
  std::vector<uint8_t> bits;  // row-major 0/1

  bool test(int x, int y) const { return bits[size_t(y) * width + x] != 0; }
};

/// One glyph per character class (0-9, A-Z without O). The O/0 merge shares
/// the zero glyph.
const GlyphBitmap& glyph_for_class(int label);

inline constexpr int kSymbolCount = 5;
/// Non-character plate symbols used as hard negatives (wheelchair-like mark,
/// flag, star, cross, ring).
const GlyphBitmap& symbol_bitmap(int index);

struct PlateSpec {
  std::string text_template = "LLLDDD";  // L = letter, D = digit, else literal
  int plate_w = 192;
  int plate_h = 64;
  double char_height_ratio = 0.52;  // glyph height vs plate height
  int spacing = 8;                  // px between glyph cells
  img::Polarity polarity = img::Polarity::DarkOnLight;
  double contrast = 1.0;       // [0.2, 1.0]
  double rotation_deg = 0.0;   // [-5, 5]
  double noise_sigma = 0.0;
  int blur_radius = 0;         // 0 or 1 (3x3 box)
  std::vector<double> per_char_contrast;  // optional per-glyph override
};

struct RenderedPlate {
  img::GrayImage image;
  std::vector<img::BBox> glyph_boxes;  // axis-aligned hulls after rotation
  std::string text;
};

RenderedPlate render_plate(const PlateSpec& spec, uint64_t seed);

struct SceneSample {
  img::GrayImage scene;
  img::BBox gt_box;
  std::string gt_text;
  std::vector<img::BBox> glyph_boxes;  // coordinates of the placed plate crop
  std::string tier = "clean";
};

inline constexpr int kSceneWidth = 320;
inline constexpr int kSceneHeight = 240;

/// Places the plate into a cluttered synthetic scene at a seeded scale in
/// [0.5, 1.5] and position. Throws InvalidArgument if the plate cannot fit.
SceneSample compose_scene(const RenderedPlate& plate, int scene_w, int scene_h,
                          uint64_t seed);

/// Difficulty tiers used by the benchmark generator.
inline constexpr const char* kTiers[3] = {"clean", "moderate", "lowcontrast"};

PlateSpec sample_plate_spec(Rng& rng, const std::string& tier);

struct LabeledPatches {
  std::vector<nnet::Tensor> patches;  // 1x24x24, values in [0,1]
  std::vector<int> labels;
};

/// n patches per class, 35*n total, uniform label histogram, rendered with
/// the full jitter range and normalized like inference-time patches.
LabeledPatches make_char_dataset(int n_per_class, uint64_t seed);

/// Hard negatives: plate backgrounds, glyph fragments, and symbol marks in
/// near-equal parts.
std::vector<nnet::Tensor> make_negative_dataset(int n, uint64_t seed);

/// n scenes with a 70/20/10 clean/moderate/lowcontrast mix (clean gets the
/// remainder). Deterministic in seed.
std::vector<SceneSample> make_benchmark(int n, uint64_t seed);

/// Writes scenes/NNNN.pgm plus manifest.tsv (filename, x, y, w, h, text,
/// tier; tab-separated, LF endings).
void write_benchmark(const std::vector<SceneSample>& samples,
                     const std::filesystem::path& dir);

struct WindowSet {
  std::vector<nnet::Tensor> windows;  // 1 x win_h x win_w
  std::vector<int> labels;            // 1 = plate, 0 = background
};

/// Detector training windows from annotated scenes: the plate crop plus
/// jittered copies as positives; low-IoU and near-miss crops as negatives.
WindowSet make_detector_windows(
    const std::vector<std::pair<img::GrayImage, img::BBox>>& annotated,
    int win_h, int win_w, uint64_t seed);

}  // namespace alpr::synth
