#pragma once

#include <filesystem>
#include <string>
#include <utility>
#include <vector>

#include "alpr/image.hpp"
#include "alpr/pipeline.hpp"

namespace alpr::eval {

struct MatchResult {
  int tp = 0;
  int fp = 0;
  int fn = 0;
  std::vector<int> det_to_gt;  // per detection: matched gt index or -1
};

/// Greedy by detection score descending: each detection takes the unmatched
/// gt of highest IoU when that IoU >= iou_thresh.
MatchResult match_detections(const std::vector<detect::PlateDetection>& dets,
                             const std::vector<img::BBox>& gts,
                             double iou_thresh);

/// Degenerate conventions: precision is 1 with no detections, recall is 1
/// with no ground truth.
std::pair<double, double> precision_recall(int tp, int fp, int fn);

/// Longest common subsequence length.
int lcs_len(const std::string& a, const std::string& b);

/// lcs_len(pred, gt) / max(|pred|, |gt|); an undetected plate (empty pred)
/// scores 0. gt must be non-empty.
double plate_score(const std::string& pred, const std::string& gt);

struct ManifestEntry {
  std::string filename;
  img::BBox box;
  std::string text;  // canonical after ingestion ('O' rewritten to '0')
  std::string tier;
};

/// Parses a benchmark manifest; throws ManifestError naming the bad line.
std::vector<ManifestEntry> read_manifest(const std::filesystem::path& path);

struct SceneRecord {
  std::string id;
  bool matched = false;
  double iou = 0.0;
  std::string pred_text;
  std::string gt_text;
  double score = 0.0;
};

struct EvalReport {
  int tp = 0;
  int fp = 0;
  int fn = 0;
  double precision = 1.0;
  double recall = 1.0;
  double mean_plate_score = 0.0;
  double exact_match_rate = 0.0;
  std::vector<SceneRecord> records;
};

/// Scores one benchmark run: readings[i] are the pipeline outputs for
/// manifest[i]'s scene.
EvalReport evaluate(const std::vector<std::vector<pipeline::PlateReading>>& readings,
                    const std::vector<ManifestEntry>& manifest,
                    double iou_thresh = 0.5);

std::string format_report(const EvalReport& report);
void write_report(const EvalReport& report, const std::filesystem::path& path);

}  // namespace alpr::eval
