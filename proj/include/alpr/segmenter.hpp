#pragma once

#include <vector>

#include "alpr/image.hpp"

namespace alpr::seg {

struct CharSegment {
  img::BBox bbox;      // plate coordinates
  img::BitMask mask;   // bbox-local character pixels (mask.width == bbox.w)
  int origin_step = 1; // which pass produced it
};

/// Lenient geometric gates; segments that slip through are filtered later by
/// the character/non-character network.
struct SegmenterConfig {
  double min_height_ratio = 0.30;   // component height vs plate height
  double max_height_ratio = 0.95;
  double min_aspect = 0.08;         // w/h
  double max_aspect = 1.10;
  double min_area_ratio = 0.003;    // pixel count vs plate area
  double wide_aspect_trigger = 1.25;
  int adaptive_window = 15;         // local-mean window, px
  int adaptive_offset = 10;         // intensity offset below/above the mean
};

struct Step1Result {
  std::vector<CharSegment> segments;
  img::Polarity polarity;
};

/// Global Otsu under both polarities; keeps the polarity with more surviving
/// components (tie: DarkOnLight). Constant plates yield an empty result.
Step1Result segment_step1(const img::GrayImage& plate,
                          const SegmenterConfig& cfg);

/// Splits wide blobs at the minimum of their vertical projection profile
/// (middle half of the width, leftmost tie), recursively.
std::vector<CharSegment> segment_step2(std::vector<CharSegment> segments,
                                       const img::GrayImage& plate,
                                       const SegmenterConfig& cfg);

/// Re-examines suspiciously wide gaps (and the outer margins) with local-mean
/// binarization to recover low-contrast characters.
std::vector<CharSegment> segment_step3(std::vector<CharSegment> segments,
                                       const img::GrayImage& plate,
                                       img::Polarity polarity,
                                       const SegmenterConfig& cfg);

/// Steps 1-3 composed; output sorted by bbox.x.
std::vector<CharSegment> segment_plate(const img::GrayImage& plate,
                                       const SegmenterConfig& cfg = {});

}  // namespace alpr::seg
