#pragma once

#include <cmath>
#include <numeric>
#include <vector>

#include "alpr/errors.hpp"

namespace alpr::nnet {

/// Dense multi-dimensional array of doubles. Training and inference run in
/// 64-bit precision; model files store 32-bit.
struct Tensor {
  std::vector<int> shape;
  std::vector<double> values;

  Tensor() = default;

  static int count(const std::vector<int>& shape) {
    int n = 1;
    for (int d : shape) {
      if (d <= 0) throw InvalidArgument("non-positive tensor dimension");
      n *= d;
    }
    return n;
  }

  static Tensor zeros(std::vector<int> shape) {
    Tensor t;
    t.values.assign(size_t(count(shape)), 0.0);
    t.shape = std::move(shape);
    return t;
  }

  int size() const { return int(values.size()); }

  bool all_finite() const {
    for (double v : values)
      if (!std::isfinite(v)) return false;
    return true;
  }

  bool operator==(const Tensor&) const = default;
};

}  // namespace alpr::nnet
