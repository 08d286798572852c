#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "alpr/rng.hpp"
#include "alpr/tensor.hpp"

namespace alpr::nnet {

enum class LayerKind : uint8_t {
  Conv2D = 1,
  MaxPool = 2,  // fixed 2x2, stride 2
  ReLU = 3,
  FullyConnected = 4,
  Softmax = 5,
};

struct Layer {
  LayerKind kind;
  // Conv2D
  int out_channels = 0;
  int kernel = 0;
  int stride = 1;
  int pad = 0;
  // FullyConnected
  int out_units = 0;
  // Learned parameters. Conv: weights {oc, ic, k, k}, bias {oc}.
  // FC: weights {out, in}, bias {out}. Empty for parameterless kinds.
  Tensor weights;
  Tensor bias;

  bool has_params() const {
    return kind == LayerKind::Conv2D || kind == LayerKind::FullyConnected;
  }
};

struct Network {
  std::vector<int> input_shape;  // {c, h, w} for conv stacks, {n} for FC-only
  int class_count = 0;
  std::vector<Layer> layers;
};

Layer conv2d(int out_channels, int kernel, int stride = 1, int pad = 0);
Layer maxpool();
Layer relu();
Layer fully_connected(int out_units);
Layer softmax();

/// Builds the network skeleton, sizing every parameter tensor by propagating
/// shapes from the input. Throws InvalidArgument on inconsistent stacks
/// (including a final layer that is not Softmax over class_count).
Network build_network(std::vector<int> input_shape, int class_count,
                      std::vector<Layer> layers);

/// Output shape of each layer given the input shape; index 0 is the input.
std::vector<std::vector<int>> layer_shapes(const Network& net);

/// He-style initialization from the toolkit PRNG; biases start at zero.
void init_params(Network& net, Rng& rng);

// Reference architectures (all convs stride 1, pad 1).
Network plate_detector_arch();    // 1x32x96 -> 2 classes
Network char_filter_arch();       // 1x24x24 -> 2 classes
Network char_recognizer_arch();   // 1x24x24 -> 35 classes

struct Activations {
  // values[0] is the input; values[i + 1] is the output of layer i.
  std::vector<Tensor> values;
  const Tensor& probabilities() const { return values.back(); }
};

Activations forward(const Network& net, const Tensor& input);

/// -log of the labeled probability, floored at 1e-12 before the log.
double cross_entropy(const Tensor& probs, int label);

struct Gradients {
  std::vector<Tensor> weights;  // same shapes as layer parameters
  std::vector<Tensor> bias;     // empty tensors for parameterless layers

  void accumulate(const Gradients& other);
  void scale(double s);
};

Gradients zero_gradients(const Network& net);

/// Analytic gradients of cross_entropy(forward(net, input), label) with
/// respect to every parameter.
Gradients backward(const Network& net, const Activations& acts, int label);

struct TrainConfig {
  double learning_rate = 0.01;
  double momentum = 0.9;
  int batch_size = 32;
  int epochs = 10;
  uint64_t seed = 42;
};

struct TrainResult {
  std::vector<double> epoch_loss;  // mean training loss per epoch
};

/// Minibatch SGD with momentum. Deterministic given cfg.seed (shuffling) and
/// the network's initial parameters.
TrainResult train(Network& net, const std::vector<Tensor>& inputs,
                  const std::vector<int>& labels, const TrainConfig& cfg);

double accuracy(const Network& net, const std::vector<Tensor>& inputs,
                const std::vector<int>& labels);

// Model file: magic "ALPRNET1", version byte, layer count, input shape and
// class count, then per layer: kind tag byte, shape ints (LE i32), parameters
// (LE f32). Round trip is bit-exact.
void save_model(const Network& net, const std::filesystem::path& path);
Network load_model(const std::filesystem::path& path);

/// Central-finite-difference check (eps) of backward() on one sample.
/// Returns the max relative error over all parameters. The test hook
/// `perturb` injects an error into one analytic gradient.
double gradient_check(const Network& net, const Tensor& input, int label,
                      double eps, bool perturb = false);

}  // namespace alpr::nnet
