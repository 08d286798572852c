#include "alpr/pipeline.hpp"

#include <algorithm>
#include <cmath>

namespace alpr::pipeline {

namespace {

void check_role(const nnet::Network& net, const std::vector<int>& input,
                int classes, const char* role) {
  if (net.input_shape != input || net.class_count != classes)
    throw InvalidArgument(std::string("model does not match the ") + role +
                          " role");
}

}  // namespace

ModelBundle load_models(const std::filesystem::path& detector_path,
                        const std::filesystem::path& filter_path,
                        const std::filesystem::path& recognizer_path) {
  ModelBundle bundle;
  bundle.detector = nnet::load_model(detector_path);
  bundle.filter = nnet::load_model(filter_path);
  bundle.recognizer = nnet::load_model(recognizer_path);
  check_role(bundle.detector,
             {1, bundle.config.detector.window_h, bundle.config.detector.window_w},
             2, "detector");
  check_role(bundle.filter, {1, ocr::kPatchSize, ocr::kPatchSize}, 2, "filter");
  check_role(bundle.recognizer, {1, ocr::kPatchSize, ocr::kPatchSize},
             ocr::kClassCount, "recognizer");
  return bundle;
}

std::vector<ocr::CharPrediction> assemble_string(
    std::vector<ocr::CharPrediction> preds) {
  if (preds.size() <= 1) return preds;

  auto x2 = [](const ocr::CharPrediction& p) {  // doubled centers stay integral
    return 2 * p.segment.bbox.x + p.segment.bbox.w;
  };
  auto y2 = [](const ocr::CharPrediction& p) {
    return 2 * p.segment.bbox.y + p.segment.bbox.h;
  };
  auto reading_less = [&](const ocr::CharPrediction& a,
                          const ocr::CharPrediction& b) {
    return std::tuple(x2(a), y2(a), a.segment.bbox.x, a.segment.bbox.y) <
           std::tuple(x2(b), y2(b), b.segment.bbox.x, b.segment.bbox.y);
  };

  std::vector<int> heights;
  int ymin = y2(preds[0]), ymax = y2(preds[0]);
  for (const auto& p : preds) {
    heights.push_back(p.segment.bbox.h);
    ymin = std::min(ymin, y2(p));
    ymax = std::max(ymax, y2(p));
  }
  std::sort(heights.begin(), heights.end());
  const int median_h = heights[(heights.size() - 1) / 2];

  // Centers are doubled, so the spread comparison doubles both sides:
  // spread > 0.5 * median_h  <=>  (ymax - ymin) > median_h.
  if (ymax - ymin > median_h) {
    // 1-D two-means on y centers, deterministically seeded at the extremes.
    double c0 = ymin, c1 = ymax;
    std::vector<int> assign(preds.size(), 0);
    for (int iter = 0; iter < 32; ++iter) {
      bool changed = false;
      for (size_t i = 0; i < preds.size(); ++i) {
        const double y = y2(preds[i]);
        const int a = std::abs(y - c0) <= std::abs(y - c1) ? 0 : 1;
        if (a != assign[i]) {
          assign[i] = a;
          changed = true;
        }
      }
      double sum0 = 0, sum1 = 0;
      int n0 = 0, n1 = 0;
      for (size_t i = 0; i < preds.size(); ++i) {
        if (assign[i] == 0) {
          sum0 += y2(preds[i]);
          n0++;
        } else {
          sum1 += y2(preds[i]);
          n1++;
        }
      }
      if (n0 > 0) c0 = sum0 / n0;
      if (n1 > 0) c1 = sum1 / n1;
      if (!changed) break;
    }
    const int top = c0 <= c1 ? 0 : 1;
    std::vector<ocr::CharPrediction> rows[2];
    for (size_t i = 0; i < preds.size(); ++i)
      rows[assign[i] == top ? 0 : 1].push_back(std::move(preds[i]));
    std::sort(rows[0].begin(), rows[0].end(), reading_less);
    std::sort(rows[1].begin(), rows[1].end(), reading_less);
    preds = std::move(rows[0]);
    preds.insert(preds.end(), std::make_move_iterator(rows[1].begin()),
                 std::make_move_iterator(rows[1].end()));
  } else {
    std::sort(preds.begin(), preds.end(), reading_less);
  }
  return preds;
}

PlateReading read_plate(const ModelBundle& models,
                        const img::GrayImage& plate) {
  PlateReading reading;
  if (plate.empty()) return reading;

  std::vector<ocr::CharPrediction> preds;
  for (seg::CharSegment& segment :
       seg::segment_plate(plate, models.config.segmenter)) {
    const nnet::Tensor patch = ocr::prepare_patch(plate, segment.bbox);
    const double charness = ocr::classify_charness(models.filter, patch);
    if (charness < models.config.charness_thresh) continue;
    const ocr::CharDecision d = ocr::classify_char(models.recognizer, patch);
    ocr::CharPrediction p;
    p.label = d.label;
    p.ch = ocr::label_to_char(d.label);
    p.confidence = d.confidence;
    p.charness = charness;
    p.segment = std::move(segment);
    preds.push_back(std::move(p));
  }
  reading.chars = assemble_string(std::move(preds));
  for (const auto& p : reading.chars) reading.text.push_back(p.ch);
  return reading;
}

std::vector<PlateReading> process_image(const ModelBundle& models,
                                        const img::GrayImage& scene) {
  std::vector<PlateReading> readings;
  for (const detect::PlateDetection& det :
       detect::detect_plates(models.detector, scene, models.config.detector)) {
    const int mx = int(std::lround(det.bbox.w * models.config.crop_margin));
    const int my = int(std::lround(det.bbox.h * models.config.crop_margin));
    const img::BBox expanded{det.bbox.x - mx, det.bbox.y - my,
                             det.bbox.w + 2 * mx, det.bbox.h + 2 * my};
    PlateReading reading = read_plate(models, img::crop(scene, expanded));
    reading.detection = det;
    readings.push_back(std::move(reading));
  }
  return readings;
}

}  // namespace alpr::pipeline
