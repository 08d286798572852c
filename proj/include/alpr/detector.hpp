#pragma once

#include <vector>

#include "alpr/image.hpp"
#include "alpr/net.hpp"

namespace alpr::detect {

struct PlateDetection {
  img::BBox bbox;  // scene coordinates
  double score = 0.0;
};

struct DetectorConfig {
  int window_h = 32;
  int window_w = 96;
  double scale_step = 0.75;
  int stride = 8;
  double score_thresh = 0.5;
  double iou_thresh = 0.3;
};

struct PyramidLevel {
  img::GrayImage image;
  double scale;  // level dimension / original dimension
};

/// Level k has dimensions floor(dim * scale_step^k); levels stop before
/// either dimension drops below the window, so every level can host at
/// least one window.
std::vector<PyramidLevel> build_pyramid(const img::GrayImage& image,
                                        double scale_step, int min_w,
                                        int min_h);

/// Scores every window on every pyramid level and emits candidates at or
/// above the score threshold, with boxes mapped back to scene coordinates.
std::vector<PlateDetection> scan(const nnet::Network& net,
                                 const img::GrayImage& image,
                                 const DetectorConfig& cfg);

/// Greedy suppression: keep by descending score (ties by x, then y), drop
/// overlaps at or above iou_thresh.
std::vector<PlateDetection> nms(std::vector<PlateDetection> candidates,
                                double iou_thresh);

/// scan + nms; results sorted by score descending.
std::vector<PlateDetection> detect_plates(const nnet::Network& net,
                                          const img::GrayImage& image,
                                          const DetectorConfig& cfg = {});

}  // namespace alpr::detect
