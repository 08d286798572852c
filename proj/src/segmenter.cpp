#include "alpr/segmenter.hpp"

#include <algorithm>
#include <cmath>

namespace alpr::seg {

namespace {

bool passes_filters(const img::BBox& box, int area, int plate_w, int plate_h,
                    const SegmenterConfig& cfg) {
  const double hr = double(box.h) / plate_h;
  if (hr < cfg.min_height_ratio || hr > cfg.max_height_ratio) return false;
  const double aspect = double(box.w) / box.h;
  if (aspect < cfg.min_aspect || aspect > cfg.max_aspect) return false;
  if (area < cfg.min_area_ratio * double(plate_w) * plate_h) return false;
  return true;
}

CharSegment to_segment(const img::Component& comp, int origin_step) {
  CharSegment seg;
  seg.bbox = comp.bbox;
  seg.origin_step = origin_step;
  seg.mask = img::BitMask::zeros(comp.bbox.w, comp.bbox.h);
  for (auto [x, y] : comp.pixels)
    seg.mask.set(x - comp.bbox.x, y - comp.bbox.y);
  return seg;
}

std::vector<CharSegment> survivors(const img::BitMask& mask, int plate_w,
                                   int plate_h, const SegmenterConfig& cfg,
                                   int origin_step) {
  std::vector<CharSegment> out;
  for (const img::Component& comp : img::connected_components(mask))
    if (passes_filters(comp.bbox, comp.area, plate_w, plate_h, cfg))
      out.push_back(to_segment(comp, origin_step));
  return out;
}

void sort_by_x(std::vector<CharSegment>& segs) {
  std::sort(segs.begin(), segs.end(),
            [](const CharSegment& a, const CharSegment& b) {
              return std::tuple(a.bbox.x, a.bbox.y, a.bbox.w, a.bbox.h) <
                     std::tuple(b.bbox.x, b.bbox.y, b.bbox.w, b.bbox.h);
            });
}

}  // namespace

Step1Result segment_step1(const img::GrayImage& plate,
                          const SegmenterConfig& cfg) {
  Step1Result result;
  result.polarity = img::Polarity::DarkOnLight;
  if (plate.empty()) return result;

  int t;
  try {
    t = img::otsu_threshold(plate);
  } catch (const DegenerateInput&) {
    return result;  // constant plate, nothing to segment
  }

  auto dark = survivors(img::binarize(plate, t, img::Polarity::DarkOnLight),
                        plate.width, plate.height, cfg, 1);
  auto light = survivors(img::binarize(plate, t, img::Polarity::LightOnDark),
                         plate.width, plate.height, cfg, 1);
  if (light.size() > dark.size()) {
    result.polarity = img::Polarity::LightOnDark;
    result.segments = std::move(light);
  } else {
    result.segments = std::move(dark);
  }
  sort_by_x(result.segments);
  return result;
}

namespace {

// Tight re-box of the columns [c0, c1) of a segment; empty optional result is
// signalled by a zero-width box.
CharSegment carve(const CharSegment& seg, int c0, int c1) {
  int minx = seg.bbox.w, maxx = -1, miny = seg.bbox.h, maxy = -1;
  for (int y = 0; y < seg.bbox.h; ++y)
    for (int x = c0; x < c1; ++x)
      if (seg.mask.test(x, y)) {
        minx = std::min(minx, x);
        maxx = std::max(maxx, x);
        miny = std::min(miny, y);
        maxy = std::max(maxy, y);
      }
  CharSegment part;
  part.origin_step = 2;
  if (maxx < 0) return part;  // no ink in this span
  part.bbox = {seg.bbox.x + minx, seg.bbox.y + miny, maxx - minx + 1,
               maxy - miny + 1};
  part.mask = img::BitMask::zeros(part.bbox.w, part.bbox.h);
  for (int y = miny; y <= maxy; ++y)
    for (int x = std::max(c0, minx); x <= maxx && x < c1; ++x)
      if (seg.mask.test(x, y)) part.mask.set(x - minx, y - miny);
  return part;
}

void split_wide(const CharSegment& seg, const img::GrayImage& plate,
                const SegmenterConfig& cfg, std::vector<CharSegment>& out) {
  const int w = seg.bbox.w, h = seg.bbox.h;
  if (double(w) / h <= cfg.wide_aspect_trigger) {
    out.push_back(seg);
    return;
  }
  const int lo = w / 4;
  const int hi = w - w / 4;
  if (hi - lo < 1) {
    out.push_back(seg);
    return;
  }
  // Leftmost minimum of the vertical projection profile in the middle half.
  int best_col = lo;
  int best = INT32_MAX;
  for (int x = lo; x < hi; ++x) {
    int col = 0;
    for (int y = 0; y < h; ++y) col += seg.mask.test(x, y);
    if (col < best) {
      best = col;
      best_col = x;
    }
  }
  const CharSegment left = carve(seg, 0, best_col);
  const CharSegment right = carve(seg, best_col, w);
  if (left.bbox.w < 2 || right.bbox.w < 2) {
    out.push_back(seg);  // split would violate min width
    return;
  }
  for (const CharSegment& part : {left, right})
    if (passes_filters(part.bbox, part.mask.count(), plate.width, plate.height,
                       cfg))
      split_wide(part, plate, cfg, out);
}

img::BitMask local_mean_binarize(const img::GrayImage& strip,
                                 img::Polarity polarity, int window,
                                 int offset) {
  const int w = strip.width, h = strip.height;
  // Summed-area table for O(1) window means.
  std::vector<uint64_t> sat(size_t(w + 1) * (h + 1), 0);
  for (int y = 0; y < h; ++y)
    for (int x = 0; x < w; ++x)
      sat[size_t(y + 1) * (w + 1) + x + 1] =
          sat[size_t(y) * (w + 1) + x + 1] + sat[size_t(y + 1) * (w + 1) + x] -
          sat[size_t(y) * (w + 1) + x] + strip.at(x, y);

  const int half = window / 2;
  img::BitMask mask = img::BitMask::zeros(w, h);
  for (int y = 0; y < h; ++y) {
    const int y0 = std::max(0, y - half), y1 = std::min(h, y + half + 1);
    for (int x = 0; x < w; ++x) {
      const int x0 = std::max(0, x - half), x1 = std::min(w, x + half + 1);
      const uint64_t sum = sat[size_t(y1) * (w + 1) + x1] -
                           sat[size_t(y0) * (w + 1) + x1] -
                           sat[size_t(y1) * (w + 1) + x0] +
                           sat[size_t(y0) * (w + 1) + x0];
      const double mean = double(sum) / (double(x1 - x0) * (y1 - y0));
      const double p = strip.at(x, y);
      const bool set = polarity == img::Polarity::DarkOnLight
                           ? p < mean - offset
                           : p > mean + offset;
      mask.set(x, y, set);
    }
  }
  return mask;
}

}  // namespace

std::vector<CharSegment> segment_step2(std::vector<CharSegment> segments,
                                       const img::GrayImage& plate,
                                       const SegmenterConfig& cfg) {
  std::vector<CharSegment> out;
  out.reserve(segments.size());
  for (const CharSegment& seg : segments) split_wide(seg, plate, cfg, out);
  sort_by_x(out);
  return out;
}

std::vector<CharSegment> segment_step3(std::vector<CharSegment> segments,
                                       const img::GrayImage& plate,
                                       img::Polarity polarity,
                                       const SegmenterConfig& cfg) {
  if (segments.empty() || plate.empty()) return segments;

  std::vector<int> widths;
  widths.reserve(segments.size());
  for (const auto& s : segments) widths.push_back(s.bbox.w);
  std::sort(widths.begin(), widths.end());
  const int median_w = widths[(widths.size() - 1) / 2];
  const double gap_thresh = 1.5 * median_w;

  std::vector<std::pair<int, int>> gaps;
  gaps.emplace_back(0, segments.front().bbox.x);
  for (size_t i = 1; i < segments.size(); ++i)
    gaps.emplace_back(segments[i - 1].bbox.right(), segments[i].bbox.x);
  gaps.emplace_back(segments.back().bbox.right(), plate.width);

  for (auto [gx0, gx1] : gaps) {
    gx0 = std::max(gx0, 0);
    gx1 = std::min(gx1, plate.width);
    if (double(gx1 - gx0) <= gap_thresh) continue;
    const img::GrayImage strip =
        img::crop(plate, {gx0, 0, gx1 - gx0, plate.height});
    const img::BitMask mask = local_mean_binarize(
        strip, polarity, cfg.adaptive_window, cfg.adaptive_offset);
    for (CharSegment seg :
         survivors(mask, plate.width, plate.height, cfg, 3)) {
      seg.bbox.x += gx0;
      bool duplicate = false;
      for (const CharSegment& existing : segments)
        if (img::iou(seg.bbox, existing.bbox) >= 0.5) {
          duplicate = true;
          break;
        }
      if (!duplicate) segments.push_back(std::move(seg));
    }
  }
  sort_by_x(segments);
  return segments;
}

std::vector<CharSegment> segment_plate(const img::GrayImage& plate,
                                       const SegmenterConfig& cfg) {
  Step1Result step1 = segment_step1(plate, cfg);
  std::vector<CharSegment> segs =
      segment_step2(std::move(step1.segments), plate, cfg);
  segs = segment_step3(std::move(segs), plate, step1.polarity, cfg);
  sort_by_x(segs);
  return segs;
}

}  // namespace alpr::seg
