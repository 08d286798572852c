#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "alpr/detector.hpp"
#include "alpr/recognizer.hpp"
#include "alpr/segmenter.hpp"

namespace alpr::pipeline {

struct PlateReading {
  detect::PlateDetection detection;
  std::string text;                       // canonical alphabet, never 'O'
  std::vector<ocr::CharPrediction> chars; // reading order, same length as text
};

struct PipelineConfig {
  detect::DetectorConfig detector;
  seg::SegmenterConfig segmenter;
  double charness_thresh = 0.5;
  double crop_margin = 0.05;  // detection box expansion per side
};

struct ModelBundle {
  nnet::Network detector;
  nnet::Network filter;
  nnet::Network recognizer;
  PipelineConfig config;
};

/// Loads the three models and validates each against its role's input shape
/// and class count.
ModelBundle load_models(const std::filesystem::path& detector_path,
                        const std::filesystem::path& filter_path,
                        const std::filesystem::path& recognizer_path);

/// Orders predictions into reading order. Two rows (top first, each
/// left-to-right) when the vertical spread of centers exceeds half the
/// median segment height, else a single left-to-right row.
std::vector<ocr::CharPrediction> assemble_string(
    std::vector<ocr::CharPrediction> preds);

/// segment -> filter -> recognize -> assemble on an already-cropped plate.
/// The detection field of the result is left default.
PlateReading read_plate(const ModelBundle& models,
                        const img::GrayImage& plate);

/// Full pipeline on a scene; one reading per post-NMS detection, ordered by
/// detection score descending.
std::vector<PlateReading> process_image(const ModelBundle& models,
                                        const img::GrayImage& scene);

}  // namespace alpr::pipeline
