#pragma once

#include <string>

#include "alpr/image.hpp"
#include "alpr/net.hpp"
#include "alpr/segmenter.hpp"

namespace alpr::ocr {

// Label space: indices 0-9 are digits '0'-'9'; 10-34 are 'A'-'Z' excluding
// 'O' in alphabetical order. 'O' is not a class; it maps to '0'.
inline constexpr int kClassCount = 35;

/// Throws InvalidArgument for lowercase or non-alphanumeric input.
int char_to_label(char c);

/// Inverse on the canonical range; never returns 'O'.
char label_to_char(int label);

/// Ground-truth ingestion: rewrites 'O' to '0' and validates that every
/// character is representable.
std::string normalize_text(const std::string& s);

/// 1xHxW tensor, pixel/255.
nnet::Tensor to_tensor(const img::GrayImage& g);

inline constexpr int kPatchSize = 24;

/// Crops the box, pads it to a square with the median border intensity,
/// and resizes to 24x24 in [0,1].
nnet::Tensor prepare_patch(const img::GrayImage& plate, const img::BBox& box);

/// Probability that the patch is a real character (class 1 of the filter).
double classify_charness(const nnet::Network& filter_net,
                         const nnet::Tensor& patch);

struct CharDecision {
  int label = 0;
  double confidence = 0.0;
};

/// Argmax of the 35-way softmax; ties break toward the smaller label.
CharDecision classify_char(const nnet::Network& recognizer_net,
                           const nnet::Tensor& patch);

struct CharPrediction {
  int label = 0;
  char ch = '0';
  double confidence = 0.0;
  double charness = 0.0;
  seg::CharSegment segment;
};

}  // namespace alpr::ocr
