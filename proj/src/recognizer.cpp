#include "alpr/recognizer.hpp"

#include <algorithm>

namespace alpr::ocr {

int char_to_label(char c) {
  if (c >= '0' && c <= '9') return c - '0';
  if (c == 'O') return 0;  // merged with zero
  if (c >= 'A' && c <= 'Z') return 10 + (c - 'A') - (c > 'O' ? 1 : 0);
  throw InvalidArgument(std::string("unsupported character '") + c + "'");
}

char label_to_char(int label) {
  if (label < 0 || label >= kClassCount)
    throw InvalidArgument("label out of range");
  if (label < 10) return char('0' + label);
  const int letter = label - 10;
  return char('A' + letter + (letter >= ('O' - 'A') ? 1 : 0));
}

std::string normalize_text(const std::string& s) {
  std::string out;
  out.reserve(s.size());
  for (char c : s) out.push_back(label_to_char(char_to_label(c)));
  return out;
}

nnet::Tensor to_tensor(const img::GrayImage& g) {
  nnet::Tensor t = nnet::Tensor::zeros({1, g.height, g.width});
  for (size_t i = 0; i < g.data.size(); ++i)
    t.values[i] = double(g.data[i]) / 255.0;
  return t;
}

nnet::Tensor prepare_patch(const img::GrayImage& plate, const img::BBox& box) {
  if (box.w <= 0 || box.h <= 0) throw InvalidArgument("degenerate patch box");
  const img::GrayImage cropped = img::crop(plate, box);

  // Background estimate: median of the crop's border ring.
  std::vector<uint8_t> ring;
  for (int x = 0; x < cropped.width; ++x) {
    ring.push_back(cropped.at(x, 0));
    if (cropped.height > 1) ring.push_back(cropped.at(x, cropped.height - 1));
  }
  for (int y = 1; y + 1 < cropped.height; ++y) {
    ring.push_back(cropped.at(0, y));
    if (cropped.width > 1) ring.push_back(cropped.at(cropped.width - 1, y));
  }
  std::sort(ring.begin(), ring.end());
  const uint8_t bg = ring[(ring.size() - 1) / 2];

  const int side = std::max(cropped.width, cropped.height);
  img::GrayImage square = img::GrayImage::filled(side, side, bg);
  const int ox = (side - cropped.width) / 2;
  const int oy = (side - cropped.height) / 2;
  for (int y = 0; y < cropped.height; ++y)
    for (int x = 0; x < cropped.width; ++x)
      square.at(ox + x, oy + y) = cropped.at(x, y);

  return to_tensor(img::resize_bilinear(square, kPatchSize, kPatchSize));
}

double classify_charness(const nnet::Network& filter_net,
                         const nnet::Tensor& patch) {
  return nnet::forward(filter_net, patch).probabilities().values[1];
}

CharDecision classify_char(const nnet::Network& recognizer_net,
                           const nnet::Tensor& patch) {
  const nnet::Tensor& probs =
      nnet::forward(recognizer_net, patch).probabilities();
  CharDecision d;
  for (int i = 1; i < probs.size(); ++i)
    if (probs.values[i] > probs.values[d.label]) d.label = i;
  d.confidence = probs.values[d.label];
  return d;
}

}  // namespace alpr::ocr
