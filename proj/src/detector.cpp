#include "alpr/detector.hpp"

#include <algorithm>
#include <cmath>

namespace alpr::detect {

std::vector<PyramidLevel> build_pyramid(const img::GrayImage& image,
                                        double scale_step, int min_w,
                                        int min_h) {
  if (scale_step <= 0.0 || scale_step >= 1.0)
    throw InvalidArgument("scale step must be in (0, 1)");
  std::vector<PyramidLevel> levels;
  double scale = 1.0;
  for (int k = 0;; ++k, scale *= scale_step) {
    const int w = int(std::floor(image.width * scale));
    const int h = int(std::floor(image.height * scale));
    if (w < min_w || h < min_h) break;
    levels.push_back(
        {k == 0 ? image : img::resize_bilinear(image, w, h), scale});
  }
  return levels;
}

std::vector<PlateDetection> scan(const nnet::Network& net,
                                 const img::GrayImage& image,
                                 const DetectorConfig& cfg) {
  if (cfg.stride < 1) throw InvalidArgument("stride must be >= 1");
  if (net.input_shape != std::vector<int>{1, cfg.window_h, cfg.window_w})
    throw InvalidArgument("network input does not match scan window");

  std::vector<PlateDetection> found;
  nnet::Tensor window = nnet::Tensor::zeros({1, cfg.window_h, cfg.window_w});

  for (const PyramidLevel& level :
       build_pyramid(image, cfg.scale_step, cfg.window_w, cfg.window_h)) {
    const img::GrayImage& im = level.image;
    for (int y = 0; y + cfg.window_h <= im.height; y += cfg.stride) {
      for (int x = 0; x + cfg.window_w <= im.width; x += cfg.stride) {
        for (int wy = 0; wy < cfg.window_h; ++wy) {
          const uint8_t* row = im.data.data() + size_t(y + wy) * im.width + x;
          double* dst = window.values.data() + size_t(wy) * cfg.window_w;
          for (int wx = 0; wx < cfg.window_w; ++wx)
            dst[wx] = double(row[wx]) / 255.0;
        }
        const double score =
            nnet::forward(net, window).probabilities().values[1];
        if (score < cfg.score_thresh) continue;

        img::BBox box{int(std::floor(x / level.scale + 0.5)),
                      int(std::floor(y / level.scale + 0.5)),
                      int(std::floor(cfg.window_w / level.scale + 0.5)),
                      int(std::floor(cfg.window_h / level.scale + 0.5))};
        box.x = std::clamp(box.x, 0, image.width - 1);
        box.y = std::clamp(box.y, 0, image.height - 1);
        box.w = std::max(1, std::min(box.w, image.width - box.x));
        box.h = std::max(1, std::min(box.h, image.height - box.y));
        found.push_back({box, score});
      }
    }
  }
  return found;
}

std::vector<PlateDetection> nms(std::vector<PlateDetection> candidates,
                                double iou_thresh) {
  if (iou_thresh < 0.0 || iou_thresh > 1.0)
    throw InvalidArgument("iou threshold outside [0, 1]");
  std::sort(candidates.begin(), candidates.end(),
            [](const PlateDetection& a, const PlateDetection& b) {
              if (a.score != b.score) return a.score > b.score;
              return std::tuple(a.bbox.x, a.bbox.y, a.bbox.w, a.bbox.h) <
                     std::tuple(b.bbox.x, b.bbox.y, b.bbox.w, b.bbox.h);
            });
  std::vector<PlateDetection> kept;
  for (const PlateDetection& cand : candidates) {
    bool suppressed = false;
    for (const PlateDetection& k : kept)
      if (img::iou(cand.bbox, k.bbox) >= iou_thresh) {
        suppressed = true;
        break;
      }
    if (!suppressed) kept.push_back(cand);
  }
  return kept;
}

std::vector<PlateDetection> detect_plates(const nnet::Network& net,
                                          const img::GrayImage& image,
                                          const DetectorConfig& cfg) {
  return nms(scan(net, image, cfg), cfg.iou_thresh);
}

}  // namespace alpr::detect
