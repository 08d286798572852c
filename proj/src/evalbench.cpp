#include "alpr/evalbench.hpp"

#include <algorithm>
#include <cstdio>
#include <fstream>
#include <sstream>

#include "alpr/recognizer.hpp"

namespace alpr::eval {

MatchResult match_detections(const std::vector<detect::PlateDetection>& dets,
                             const std::vector<img::BBox>& gts,
                             double iou_thresh) {
  if (iou_thresh <= 0.0 || iou_thresh > 1.0)
    throw InvalidArgument("iou threshold outside (0, 1]");

  std::vector<size_t> order(dets.size());
  for (size_t i = 0; i < order.size(); ++i) order[i] = i;
  std::sort(order.begin(), order.end(), [&](size_t a, size_t b) {
    if (dets[a].score != dets[b].score) return dets[a].score > dets[b].score;
    return std::tuple(dets[a].bbox.x, dets[a].bbox.y, dets[a].bbox.w) <
           std::tuple(dets[b].bbox.x, dets[b].bbox.y, dets[b].bbox.w);
  });

  MatchResult m;
  m.det_to_gt.assign(dets.size(), -1);
  std::vector<uint8_t> taken(gts.size(), 0);
  for (size_t di : order) {
    int best_gt = -1;
    double best_iou = 0.0;
    for (size_t gi = 0; gi < gts.size(); ++gi) {
      if (taken[gi]) continue;
      const double v = img::iou(dets[di].bbox, gts[gi]);
      if (v > best_iou) {
        best_iou = v;
        best_gt = int(gi);
      }
    }
    if (best_gt >= 0 && best_iou >= iou_thresh) {
      taken[best_gt] = 1;
      m.det_to_gt[di] = best_gt;
      m.tp++;
    } else {
      m.fp++;
    }
  }
  for (uint8_t t : taken)
    if (!t) m.fn++;
  return m;
}

std::pair<double, double> precision_recall(int tp, int fp, int fn) {
  const double precision = tp + fp == 0 ? 1.0 : double(tp) / double(tp + fp);
  const double recall = tp + fn == 0 ? 1.0 : double(tp) / double(tp + fn);
  return {precision, recall};
}

int lcs_len(const std::string& a, const std::string& b) {
  if (a.empty() || b.empty()) return 0;
  std::vector<int> prev(b.size() + 1, 0), cur(b.size() + 1, 0);
  for (size_t i = 1; i <= a.size(); ++i) {
    for (size_t j = 1; j <= b.size(); ++j) {
      cur[j] = a[i - 1] == b[j - 1] ? prev[j - 1] + 1
                                    : std::max(prev[j], cur[j - 1]);
    }
    std::swap(prev, cur);
  }
  return prev[b.size()];
}

double plate_score(const std::string& pred, const std::string& gt) {
  if (gt.empty()) throw InvalidArgument("empty ground-truth text");
  if (pred.empty()) return 0.0;
  return double(lcs_len(pred, gt)) / double(std::max(pred.size(), gt.size()));
}

std::vector<ManifestEntry> read_manifest(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path.string());

  std::vector<ManifestEntry> entries;
  std::string line;
  int line_no = 0;
  auto parse_int = [&](const std::string& field, const char* what) {
    if (field.empty() ||
        field.find_first_not_of("-0123456789") != std::string::npos)
      throw ManifestError(line_no, std::string("bad ") + what + " on line " +
                                       std::to_string(line_no));
    return std::stoi(field);
  };
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    std::vector<std::string> fields;
    std::stringstream ss(line);
    std::string field;
    while (std::getline(ss, field, '\t')) fields.push_back(field);
    if (fields.size() != 7)
      throw ManifestError(line_no, "expected 7 fields on line " +
                                       std::to_string(line_no) + ", got " +
                                       std::to_string(fields.size()));
    ManifestEntry e;
    e.filename = fields[0];
    e.box.x = parse_int(fields[1], "x");
    e.box.y = parse_int(fields[2], "y");
    e.box.w = parse_int(fields[3], "w");
    e.box.h = parse_int(fields[4], "h");
    if (e.box.w <= 0 || e.box.h <= 0)
      throw ManifestError(line_no,
                          "non-positive box on line " + std::to_string(line_no));
    try {
      e.text = ocr::normalize_text(fields[5]);
    } catch (const InvalidArgument& err) {
      throw ManifestError(line_no, std::string(err.what()) + " on line " +
                                       std::to_string(line_no));
    }
    if (e.text.empty())
      throw ManifestError(line_no,
                          "empty text on line " + std::to_string(line_no));
    e.tier = fields[6];
    entries.push_back(std::move(e));
  }
  return entries;
}

EvalReport evaluate(
    const std::vector<std::vector<pipeline::PlateReading>>& readings,
    const std::vector<ManifestEntry>& manifest, double iou_thresh) {
  if (readings.size() != manifest.size())
    throw InvalidArgument("readings and manifest differ in length");

  EvalReport report;
  double score_sum = 0.0;
  int exact = 0;
  for (size_t i = 0; i < manifest.size(); ++i) {
    const auto& scene_readings = readings[i];
    std::vector<detect::PlateDetection> dets;
    dets.reserve(scene_readings.size());
    for (const auto& r : scene_readings) dets.push_back(r.detection);

    const MatchResult m =
        match_detections(dets, {manifest[i].box}, iou_thresh);
    report.tp += m.tp;
    report.fp += m.fp;
    report.fn += m.fn;

    SceneRecord rec;
    rec.id = manifest[i].filename;
    rec.gt_text = manifest[i].text;
    int matched_det = -1;
    for (size_t d = 0; d < m.det_to_gt.size(); ++d)
      if (m.det_to_gt[d] == 0) matched_det = int(d);
    if (matched_det >= 0) {
      rec.matched = true;
      rec.iou = img::iou(dets[matched_det].bbox, manifest[i].box);
      rec.pred_text = scene_readings[matched_det].text;
      rec.score = plate_score(rec.pred_text, rec.gt_text);
    } else {
      // No detection matched: the penalty rule scores the plate 0.
      for (const auto& d : dets)
        rec.iou = std::max(rec.iou, img::iou(d.bbox, manifest[i].box));
      rec.score = 0.0;
    }
    score_sum += rec.score;
    exact += rec.matched && rec.pred_text == rec.gt_text;
    report.records.push_back(std::move(rec));
  }

  const auto [precision, recall] =
      precision_recall(report.tp, report.fp, report.fn);
  report.precision = precision;
  report.recall = recall;
  const double n = double(manifest.size());
  report.mean_plate_score = manifest.empty() ? 0.0 : score_sum / n;
  report.exact_match_rate = manifest.empty() ? 0.0 : double(exact) / n;
  return report;
}

std::string format_report(const EvalReport& report) {
  char buf[256];
  std::string out;
  out += "# plate recognition benchmark report\n";
  std::snprintf(buf, sizeof buf,
                "scenes=%zu\ndetection_tp=%d\ndetection_fp=%d\ndetection_fn=%d\n",
                report.records.size(), report.tp, report.fp, report.fn);
  out += buf;
  std::snprintf(buf, sizeof buf,
                "precision=%.6f\nrecall=%.6f\nmean_plate_score=%.6f\n"
                "exact_match_rate=%.6f\n",
                report.precision, report.recall, report.mean_plate_score,
                report.exact_match_rate);
  out += buf;
  out += "# id\tmatched\tiou\tpred\tgt\tscore\n";
  for (const SceneRecord& r : report.records) {
    std::snprintf(buf, sizeof buf, "%s\t%d\t%.4f\t%s\t%s\t%.6f\n",
                  r.id.c_str(), r.matched ? 1 : 0, r.iou,
                  r.pred_text.empty() ? "-" : r.pred_text.c_str(),
                  r.gt_text.c_str(), r.score);
    out += buf;
  }
  return out;
}

void write_report(const EvalReport& report,
                  const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write " + path.string());
  out << format_report(report);
  if (!out) throw IoError("write failed: " + path.string());
}

}  // namespace alpr::eval
