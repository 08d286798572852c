#include "alpr/net.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <fstream>
#include <numeric>

#include "alpr/kernels.hpp"

namespace alpr::nnet {

Layer conv2d(int out_channels, int kernel, int stride, int pad) {
  Layer l;
  l.kind = LayerKind::Conv2D;
  l.out_channels = out_channels;
  l.kernel = kernel;
  l.stride = stride;
  l.pad = pad;
  return l;
}

Layer maxpool() { return Layer{.kind = LayerKind::MaxPool}; }
Layer relu() { return Layer{.kind = LayerKind::ReLU}; }

Layer fully_connected(int out_units) {
  Layer l;
  l.kind = LayerKind::FullyConnected;
  l.out_units = out_units;
  return l;
}

Layer softmax() { return Layer{.kind = LayerKind::Softmax}; }

namespace {

std::vector<int> output_shape(const Layer& l, const std::vector<int>& in) {
  switch (l.kind) {
    case LayerKind::Conv2D: {
      if (in.size() != 3) throw InvalidArgument("conv input must be CxHxW");
      if (l.kernel < 1 || l.stride < 1 || l.pad < 0 || l.out_channels < 1)
        throw InvalidArgument("bad conv parameters");
      const int oh = (in[1] + 2 * l.pad - l.kernel) / l.stride + 1;
      const int ow = (in[2] + 2 * l.pad - l.kernel) / l.stride + 1;
      if (in[1] + 2 * l.pad < l.kernel || in[2] + 2 * l.pad < l.kernel)
        throw InvalidArgument("conv kernel larger than padded input");
      return {l.out_channels, oh, ow};
    }
    case LayerKind::MaxPool: {
      if (in.size() != 3) throw InvalidArgument("pool input must be CxHxW");
      if (in[1] < 2 || in[2] < 2)
        throw InvalidArgument("pool input smaller than 2x2");
      return {in[0], in[1] / 2, in[2] / 2};
    }
    case LayerKind::ReLU:
      return in;
    case LayerKind::FullyConnected: {
      if (l.out_units < 1) throw InvalidArgument("bad fc parameters");
      return {l.out_units};
    }
    case LayerKind::Softmax: {
      if (in.size() != 1)
        throw InvalidArgument("softmax input must be a vector");
      return in;
    }
  }
  throw InvalidArgument("unknown layer kind");
}

}  // namespace

Network build_network(std::vector<int> input_shape, int class_count,
                      std::vector<Layer> layers) {
  if (layers.empty()) throw InvalidArgument("network needs layers");
  Network net;
  net.input_shape = std::move(input_shape);
  net.class_count = class_count;
  net.layers = std::move(layers);

  std::vector<int> shape = net.input_shape;
  Tensor::count(shape);  // validates positivity
  for (Layer& l : net.layers) {
    if (l.kind == LayerKind::Conv2D) {
      const int ic = shape.size() == 3 ? shape[0] : 0;
      std::vector<int> out = output_shape(l, shape);
      l.weights = Tensor::zeros({l.out_channels, ic, l.kernel, l.kernel});
      l.bias = Tensor::zeros({l.out_channels});
      shape = std::move(out);
    } else if (l.kind == LayerKind::FullyConnected) {
      const int in_units = Tensor::count(shape);
      std::vector<int> out = output_shape(l, {in_units});
      l.weights = Tensor::zeros({l.out_units, in_units});
      l.bias = Tensor::zeros({l.out_units});
      shape = std::move(out);
    } else {
      shape = output_shape(l, shape);
    }
  }
  if (net.layers.back().kind != LayerKind::Softmax)
    throw InvalidArgument("final layer must be softmax");
  if (shape.size() != 1 || shape[0] != net.class_count)
    throw InvalidArgument("output size does not match class count");
  return net;
}

std::vector<std::vector<int>> layer_shapes(const Network& net) {
  std::vector<std::vector<int>> shapes;
  shapes.push_back(net.input_shape);
  std::vector<int> shape = net.input_shape;
  for (const Layer& l : net.layers) {
    if (l.kind == LayerKind::FullyConnected)
      shape = output_shape(l, {Tensor::count(shape)});
    else
      shape = output_shape(l, shape);
    shapes.push_back(shape);
  }
  return shapes;
}

void init_params(Network& net, Rng& rng) {
  for (Layer& l : net.layers) {
    if (!l.has_params()) continue;
    const int fan_in = l.kind == LayerKind::Conv2D
                           ? l.weights.shape[1] * l.kernel * l.kernel
                           : l.weights.shape[1];
    const double stddev = std::sqrt(2.0 / fan_in);
    for (double& w : l.weights.values) w = rng.normal(0.0, stddev);
    for (double& b : l.bias.values) b = 0.0;
  }
}

Network plate_detector_arch() {
  return build_network({1, 32, 96}, 2,
                       {conv2d(8, 3, 1, 1), relu(), maxpool(),
                        conv2d(16, 3, 1, 1), relu(), maxpool(),
                        fully_connected(64), relu(), fully_connected(2),
                        softmax()});
}

Network char_filter_arch() {
  return build_network({1, 24, 24}, 2,
                       {conv2d(8, 3, 1, 1), relu(), maxpool(),
                        fully_connected(32), relu(), fully_connected(2),
                        softmax()});
}

Network char_recognizer_arch() {
  return build_network({1, 24, 24}, 35,
                       {conv2d(8, 3, 1, 1), relu(), maxpool(),
                        conv2d(16, 3, 1, 1), relu(), maxpool(),
                        fully_connected(128), relu(), fully_connected(35),
                        softmax()});
}

namespace {

Tensor pad_input(const Tensor& in, int pad) {
  if (pad == 0) return in;
  const int c = in.shape[0], h = in.shape[1], w = in.shape[2];
  Tensor out = Tensor::zeros({c, h + 2 * pad, w + 2 * pad});
  const int pw = w + 2 * pad;
  for (int ci = 0; ci < c; ++ci) {
    const double* src = in.values.data() + size_t(ci) * h * w;
    double* dst = out.values.data() + size_t(ci) * (h + 2 * pad) * pw;
    for (int y = 0; y < h; ++y)
      std::copy(src + size_t(y) * w, src + size_t(y + 1) * w,
                dst + size_t(y + pad) * pw + pad);
  }
  return out;
}

Tensor conv_forward(const Layer& l, const Tensor& in) {
  const Tensor padded = pad_input(in, l.pad);
  const int ic = in.shape[0];
  const int ph = padded.shape[1], pw = padded.shape[2];
  const int oh = (ph - l.kernel) / l.stride + 1;
  const int ow = (pw - l.kernel) / l.stride + 1;
  Tensor out = Tensor::zeros({l.out_channels, oh, ow});

  for (int oc = 0; oc < l.out_channels; ++oc) {
    double* plane = out.values.data() + size_t(oc) * oh * ow;
    std::fill(plane, plane + size_t(oh) * ow, l.bias.values[oc]);
  }

  const int k = l.kernel;
  for (int oc = 0; oc < l.out_channels; ++oc) {
    double* oplane = out.values.data() + size_t(oc) * oh * ow;
    for (int c = 0; c < ic; ++c) {
      const double* iplane = padded.values.data() + size_t(c) * ph * pw;
      const double* wbase =
          l.weights.values.data() + (size_t(oc) * ic + c) * k * k;
      for (int ky = 0; ky < k; ++ky) {
        for (int kx = 0; kx < k; ++kx) {
          const double w = wbase[ky * k + kx];
          if (l.stride == 1) {
            for (int oy = 0; oy < oh; ++oy)
              kernels::axpy(w, iplane + size_t(oy + ky) * pw + kx,
                            oplane + size_t(oy) * ow, size_t(ow));
          } else {
            for (int oy = 0; oy < oh; ++oy) {
              const double* irow =
                  iplane + size_t(oy * l.stride + ky) * pw + kx;
              double* orow = oplane + size_t(oy) * ow;
              for (int ox = 0; ox < ow; ++ox)
                orow[ox] += w * irow[size_t(ox) * l.stride];
            }
          }
        }
      }
    }
  }
  return out;
}

Tensor pool_forward(const Tensor& in) {
  const int c = in.shape[0], h = in.shape[1], w = in.shape[2];
  const int oh = h / 2, ow = w / 2;
  Tensor out = Tensor::zeros({c, oh, ow});
  for (int ci = 0; ci < c; ++ci) {
    const double* ip = in.values.data() + size_t(ci) * h * w;
    double* op = out.values.data() + size_t(ci) * oh * ow;
    for (int oy = 0; oy < oh; ++oy) {
      for (int ox = 0; ox < ow; ++ox) {
        const double* base = ip + size_t(2 * oy) * w + 2 * ox;
        double m = base[0];
        if (base[1] > m) m = base[1];
        if (base[w] > m) m = base[w];
        if (base[w + 1] > m) m = base[w + 1];
        op[size_t(oy) * ow + ox] = m;
      }
    }
  }
  return out;
}

Tensor fc_forward(const Layer& l, const Tensor& in) {
  const int n = in.size();
  Tensor out = Tensor::zeros({l.out_units});
  const double* x = in.values.data();
  for (int o = 0; o < l.out_units; ++o)
    out.values[o] = l.bias.values[o] +
                    kernels::dot(l.weights.values.data() + size_t(o) * n, x,
                                 size_t(n));
  return out;
}

Tensor softmax_forward(const Tensor& in) {
  Tensor out = Tensor::zeros(in.shape);
  double mx = in.values[0];
  for (double v : in.values) mx = std::max(mx, v);
  double denom = 0.0;
  for (size_t i = 0; i < in.values.size(); ++i) {
    out.values[i] = std::exp(in.values[i] - mx);
    denom += out.values[i];
  }
  for (double& v : out.values) v /= denom;
  return out;
}

}  // namespace

Activations forward(const Network& net, const Tensor& input) {
  if (input.shape != net.input_shape)
    throw InvalidArgument("input shape does not match network");
  Activations acts;
  acts.values.reserve(net.layers.size() + 1);
  acts.values.push_back(input);
  for (const Layer& l : net.layers) {
    const Tensor& in = acts.values.back();
    switch (l.kind) {
      case LayerKind::Conv2D:
        acts.values.push_back(conv_forward(l, in));
        break;
      case LayerKind::MaxPool:
        acts.values.push_back(pool_forward(in));
        break;
      case LayerKind::ReLU: {
        Tensor out = in;
        for (double& v : out.values) v = v > 0.0 ? v : 0.0;
        acts.values.push_back(std::move(out));
        break;
      }
      case LayerKind::FullyConnected: {
        Tensor flat = in;
        flat.shape = {flat.size()};
        acts.values.push_back(fc_forward(l, flat));
        break;
      }
      case LayerKind::Softmax:
        acts.values.push_back(softmax_forward(in));
        break;
    }
  }
  return acts;
}

double cross_entropy(const Tensor& probs, int label) {
  if (label < 0 || label >= probs.size())
    throw InvalidArgument("label out of range");
  const double p = std::max(probs.values[label], 1e-12);
  return -std::log(p);
}

void Gradients::accumulate(const Gradients& other) {
  for (size_t i = 0; i < weights.size(); ++i) {
    if (weights[i].values.empty()) continue;
    kernels::axpy(1.0, other.weights[i].values.data(),
                  weights[i].values.data(), weights[i].values.size());
    kernels::axpy(1.0, other.bias[i].values.data(), bias[i].values.data(),
                  bias[i].values.size());
  }
}

void Gradients::scale(double s) {
  for (size_t i = 0; i < weights.size(); ++i) {
    kernels::scale(s, weights[i].values.data(), weights[i].values.size());
    kernels::scale(s, bias[i].values.data(), bias[i].values.size());
  }
}

Gradients zero_gradients(const Network& net) {
  Gradients g;
  g.weights.resize(net.layers.size());
  g.bias.resize(net.layers.size());
  for (size_t i = 0; i < net.layers.size(); ++i) {
    if (!net.layers[i].has_params()) continue;
    g.weights[i] = Tensor::zeros(net.layers[i].weights.shape);
    g.bias[i] = Tensor::zeros(net.layers[i].bias.shape);
  }
  return g;
}

namespace {

void conv_backward(const Layer& l, const Tensor& in, const Tensor& delta_out,
                   Tensor& dw, Tensor& db, Tensor& delta_in) {
  const Tensor padded = pad_input(in, l.pad);
  const int ic = in.shape[0];
  const int ph = padded.shape[1], pw = padded.shape[2];
  const int oh = delta_out.shape[1], ow = delta_out.shape[2];
  const int k = l.kernel;

  for (int oc = 0; oc < l.out_channels; ++oc) {
    const double* dplane = delta_out.values.data() + size_t(oc) * oh * ow;
    double s = 0.0;
    for (size_t i = 0; i < size_t(oh) * ow; ++i) s += dplane[i];
    db.values[oc] += s;
  }

  Tensor dpad = Tensor::zeros({ic, ph, pw});
  for (int oc = 0; oc < l.out_channels; ++oc) {
    const double* dplane = delta_out.values.data() + size_t(oc) * oh * ow;
    for (int c = 0; c < ic; ++c) {
      const double* iplane = padded.values.data() + size_t(c) * ph * pw;
      double* dpplane = dpad.values.data() + size_t(c) * ph * pw;
      const size_t wbase = (size_t(oc) * ic + c) * k * k;
      for (int ky = 0; ky < k; ++ky) {
        for (int kx = 0; kx < k; ++kx) {
          const double w = l.weights.values[wbase + ky * k + kx];
          double g = 0.0;
          if (l.stride == 1) {
            for (int oy = 0; oy < oh; ++oy) {
              const double* drow = dplane + size_t(oy) * ow;
              g += kernels::dot(drow, iplane + size_t(oy + ky) * pw + kx,
                                size_t(ow));
              kernels::axpy(w, drow, dpplane + size_t(oy + ky) * pw + kx,
                            size_t(ow));
            }
          } else {
            for (int oy = 0; oy < oh; ++oy) {
              const double* drow = dplane + size_t(oy) * ow;
              const size_t irow = size_t(oy * l.stride + ky) * pw + kx;
              for (int ox = 0; ox < ow; ++ox) {
                g += drow[ox] * iplane[irow + size_t(ox) * l.stride];
                dpplane[irow + size_t(ox) * l.stride] += w * drow[ox];
              }
            }
          }
          dw.values[wbase + ky * k + kx] += g;
        }
      }
    }
  }

  // Strip the padding back off.
  delta_in = Tensor::zeros(in.shape);
  const int h = in.shape[1], w = in.shape[2];
  for (int c = 0; c < ic; ++c) {
    const double* src = dpad.values.data() + size_t(c) * ph * pw;
    double* dst = delta_in.values.data() + size_t(c) * h * w;
    for (int y = 0; y < h; ++y)
      std::copy(src + size_t(y + l.pad) * pw + l.pad,
                src + size_t(y + l.pad) * pw + l.pad + w,
                dst + size_t(y) * w);
  }
}

void pool_backward(const Tensor& in, const Tensor& delta_out,
                   Tensor& delta_in) {
  const int c = in.shape[0], h = in.shape[1], w = in.shape[2];
  const int oh = h / 2, ow = w / 2;
  delta_in = Tensor::zeros(in.shape);
  for (int ci = 0; ci < c; ++ci) {
    const double* ip = in.values.data() + size_t(ci) * h * w;
    const double* dp = delta_out.values.data() + size_t(ci) * oh * ow;
    double* dip = delta_in.values.data() + size_t(ci) * h * w;
    for (int oy = 0; oy < oh; ++oy) {
      for (int ox = 0; ox < ow; ++ox) {
        const size_t base = size_t(2 * oy) * w + 2 * ox;
        // First maximum in scan order wins ties, matching the forward pass.
        size_t best = base;
        if (ip[base + 1] > ip[best]) best = base + 1;
        if (ip[base + w] > ip[best]) best = base + w;
        if (ip[base + w + 1] > ip[best]) best = base + w + 1;
        dip[best] += dp[size_t(oy) * ow + ox];
      }
    }
  }
}

}  // namespace

Gradients backward(const Network& net, const Activations& acts, int label) {
  if (acts.values.size() != net.layers.size() + 1)
    throw InvalidArgument("activations do not match network");
  Gradients grads = zero_gradients(net);

  // The loss is cross-entropy on the final softmax, so the gradient with
  // respect to the softmax input is probs - onehot.
  Tensor delta = acts.values.back();
  if (label < 0 || label >= delta.size())
    throw InvalidArgument("label out of range");
  delta.values[label] -= 1.0;

  for (int i = int(net.layers.size()) - 1; i >= 0; --i) {
    const Layer& l = net.layers[i];
    const Tensor& in = acts.values[i];
    switch (l.kind) {
      case LayerKind::Softmax:
        if (i != int(net.layers.size()) - 1)
          throw InvalidArgument("softmax must be the final layer");
        break;  // delta already holds d(loss)/d(softmax input)
      case LayerKind::ReLU: {
        for (int j = 0; j < delta.size(); ++j)
          if (in.values[j] <= 0.0) delta.values[j] = 0.0;
        break;
      }
      case LayerKind::MaxPool: {
        Tensor delta_in;
        pool_backward(in, delta, delta_in);
        delta = std::move(delta_in);
        break;
      }
      case LayerKind::FullyConnected: {
        const int n = in.size();
        Tensor delta_in = Tensor::zeros({n});
        for (int o = 0; o < l.out_units; ++o) {
          const double d = delta.values[o];
          grads.bias[i].values[o] += d;
          kernels::axpy(d, in.values.data(),
                        grads.weights[i].values.data() + size_t(o) * n,
                        size_t(n));
          kernels::axpy(d, l.weights.values.data() + size_t(o) * n,
                        delta_in.values.data(), size_t(n));
        }
        delta_in.shape = in.shape;
        delta = std::move(delta_in);
        break;
      }
      case LayerKind::Conv2D: {
        Tensor delta_in;
        conv_backward(l, in, delta, grads.weights[i], grads.bias[i],
                      delta_in);
        delta = std::move(delta_in);
        break;
      }
    }
  }
  return grads;
}

TrainResult train(Network& net, const std::vector<Tensor>& inputs,
                  const std::vector<int>& labels, const TrainConfig& cfg) {
  if (inputs.empty()) throw InvalidArgument("empty dataset");
  if (inputs.size() != labels.size())
    throw InvalidArgument("inputs and labels differ in length");
  for (int y : labels)
    if (y < 0 || y >= net.class_count)
      throw InvalidArgument("label out of range");
  if (cfg.learning_rate < 0.0 || cfg.batch_size < 1 || cfg.epochs < 0)
    throw InvalidArgument("bad train config");

  Rng rng = Rng(cfg.seed).fork(0x5347444d);
  Gradients velocity = zero_gradients(net);
  Gradients batch_grad = zero_gradients(net);

  std::vector<size_t> order(inputs.size());
  std::iota(order.begin(), order.end(), size_t{0});

  TrainResult result;
  for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
    rng.shuffle(order);
    double epoch_loss = 0.0;
    size_t pos = 0;
    while (pos < order.size()) {
      const size_t bn = std::min(size_t(cfg.batch_size), order.size() - pos);
      for (Tensor& t : batch_grad.weights)
        std::fill(t.values.begin(), t.values.end(), 0.0);
      for (Tensor& t : batch_grad.bias)
        std::fill(t.values.begin(), t.values.end(), 0.0);
      for (size_t j = 0; j < bn; ++j) {
        const size_t idx = order[pos + j];
        Activations acts = forward(net, inputs[idx]);
        epoch_loss += cross_entropy(acts.probabilities(), labels[idx]);
        batch_grad.accumulate(backward(net, acts, labels[idx]));
      }
      batch_grad.scale(1.0 / double(bn));

      for (size_t i = 0; i < net.layers.size(); ++i) {
        Layer& l = net.layers[i];
        if (!l.has_params()) continue;
        kernels::scale(cfg.momentum, velocity.weights[i].values.data(),
                       velocity.weights[i].values.size());
        kernels::axpy(1.0, batch_grad.weights[i].values.data(),
                      velocity.weights[i].values.data(),
                      velocity.weights[i].values.size());
        kernels::axpy(-cfg.learning_rate, velocity.weights[i].values.data(),
                      l.weights.values.data(), l.weights.values.size());

        kernels::scale(cfg.momentum, velocity.bias[i].values.data(),
                       velocity.bias[i].values.size());
        kernels::axpy(1.0, batch_grad.bias[i].values.data(),
                      velocity.bias[i].values.data(),
                      velocity.bias[i].values.size());
        kernels::axpy(-cfg.learning_rate, velocity.bias[i].values.data(),
                      l.bias.values.data(), l.bias.values.size());
      }
      pos += bn;
    }
    result.epoch_loss.push_back(epoch_loss / double(inputs.size()));
  }
  return result;
}

double accuracy(const Network& net, const std::vector<Tensor>& inputs,
                const std::vector<int>& labels) {
  if (inputs.empty()) return 0.0;
  size_t correct = 0;
  for (size_t i = 0; i < inputs.size(); ++i) {
    const Tensor& p = forward(net, inputs[i]).probabilities();
    int best = 0;
    for (int j = 1; j < p.size(); ++j)
      if (p.values[j] > p.values[best]) best = j;
    correct += best == labels[i];
  }
  return double(correct) / double(inputs.size());
}

namespace {

constexpr char kMagic[8] = {'A', 'L', 'P', 'R', 'N', 'E', 'T', '1'};
constexpr uint8_t kVersion = 1;

void put_u32(std::ostream& out, uint32_t v) {
  const uint8_t b[4] = {uint8_t(v), uint8_t(v >> 8), uint8_t(v >> 16),
                        uint8_t(v >> 24)};
  out.write(reinterpret_cast<const char*>(b), 4);
}

void put_f32(std::ostream& out, float f) {
  uint32_t v;
  std::memcpy(&v, &f, 4);
  put_u32(out, v);
}

uint32_t get_u32(std::istream& in) {
  uint8_t b[4];
  in.read(reinterpret_cast<char*>(b), 4);
  if (in.gcount() != 4)
    throw ModelError(ModelError::Kind::Truncated, "model file truncated");
  return uint32_t(b[0]) | uint32_t(b[1]) << 8 | uint32_t(b[2]) << 16 |
         uint32_t(b[3]) << 24;
}

float get_f32(std::istream& in) {
  const uint32_t v = get_u32(in);
  float f;
  std::memcpy(&f, &v, 4);
  return f;
}

void put_params(std::ostream& out, const Tensor& t) {
  for (double v : t.values) put_f32(out, float(v));
}

void get_params(std::istream& in, Tensor& t) {
  for (double& v : t.values) v = double(get_f32(in));
}

}  // namespace

void save_model(const Network& net, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write " + path.string());
  out.write(kMagic, 8);
  out.put(char(kVersion));
  put_u32(out, uint32_t(net.layers.size()));
  put_u32(out, uint32_t(net.input_shape.size()));
  for (int d : net.input_shape) put_u32(out, uint32_t(d));
  put_u32(out, uint32_t(net.class_count));
  for (const Layer& l : net.layers) {
    out.put(char(uint8_t(l.kind)));
    switch (l.kind) {
      case LayerKind::Conv2D:
        put_u32(out, uint32_t(l.out_channels));
        put_u32(out, uint32_t(l.weights.shape[1]));  // in channels
        put_u32(out, uint32_t(l.kernel));
        put_u32(out, uint32_t(l.stride));
        put_u32(out, uint32_t(l.pad));
        put_params(out, l.weights);
        put_params(out, l.bias);
        break;
      case LayerKind::FullyConnected:
        put_u32(out, uint32_t(l.out_units));
        put_u32(out, uint32_t(l.weights.shape[1]));  // in units
        put_params(out, l.weights);
        put_params(out, l.bias);
        break;
      default:
        break;
    }
  }
  if (!out) throw IoError("write failed: " + path.string());
}

Network load_model(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path.string());

  char magic[8] = {};
  in.read(magic, 8);
  if (in.gcount() != 8 || std::memcmp(magic, kMagic, 8) != 0)
    throw ModelError(ModelError::Kind::BadMagic, "bad model magic");
  const int version = in.get();
  if (version == EOF)
    throw ModelError(ModelError::Kind::Truncated, "model file truncated");
  if (version != kVersion)
    throw ModelError(ModelError::Kind::BadVersion,
                     "unsupported model version " + std::to_string(version));

  const uint32_t layer_count = get_u32(in);
  if (layer_count == 0 || layer_count > 1024)
    throw ModelError(ModelError::Kind::Corrupt, "implausible layer count");
  const uint32_t ndim = get_u32(in);
  if (ndim == 0 || ndim > 4)
    throw ModelError(ModelError::Kind::Corrupt, "implausible input rank");
  std::vector<int> input_shape(ndim);
  for (uint32_t i = 0; i < ndim; ++i) input_shape[i] = int(get_u32(in));
  const int class_count = int(get_u32(in));

  std::vector<Layer> layers;
  std::vector<std::pair<int, int>> recorded;  // per layer: (oc/out, ic/in)
  for (uint32_t i = 0; i < layer_count; ++i) {
    const int tag = in.get();
    if (tag == EOF)
      throw ModelError(ModelError::Kind::Truncated, "model file truncated");
    switch (LayerKind(tag)) {
      case LayerKind::Conv2D: {
        const int oc = int(get_u32(in));
        const int ic = int(get_u32(in));
        const int k = int(get_u32(in));
        const int stride = int(get_u32(in));
        const int pad = int(get_u32(in));
        layers.push_back(conv2d(oc, k, stride, pad));
        recorded.emplace_back(oc, ic);
        break;
      }
      case LayerKind::FullyConnected: {
        const int out = int(get_u32(in));
        const int inu = int(get_u32(in));
        layers.push_back(fully_connected(out));
        recorded.emplace_back(out, inu);
        break;
      }
      case LayerKind::MaxPool:
        layers.push_back(maxpool());
        recorded.emplace_back(0, 0);
        break;
      case LayerKind::ReLU:
        layers.push_back(relu());
        recorded.emplace_back(0, 0);
        break;
      case LayerKind::Softmax:
        layers.push_back(softmax());
        recorded.emplace_back(0, 0);
        break;
      default:
        throw ModelError(ModelError::Kind::Corrupt,
                         "unknown layer tag " + std::to_string(tag));
    }
    // Parameters directly follow each parameterized layer's shape ints.
    Layer& l = layers.back();
    if (l.kind == LayerKind::Conv2D) {
      const auto [oc, ic] = recorded.back();
      if (oc < 1 || ic < 1 || l.kernel < 1 || l.stride < 1 || l.pad < 0 ||
          1ll * oc * ic * l.kernel * l.kernel > (1ll << 28))
        throw ModelError(ModelError::Kind::Corrupt, "bad conv record");
      l.weights = Tensor::zeros({oc, ic, l.kernel, l.kernel});
      l.bias = Tensor::zeros({oc});
      get_params(in, l.weights);
      get_params(in, l.bias);
    } else if (l.kind == LayerKind::FullyConnected) {
      const auto [out, inu] = recorded.back();
      if (out < 1 || inu < 1 || 1ll * out * inu > (1ll << 28))
        throw ModelError(ModelError::Kind::Corrupt, "bad fc record");
      l.weights = Tensor::zeros({out, inu});
      l.bias = Tensor::zeros({out});
      get_params(in, l.weights);
      get_params(in, l.bias);
    }
  }

  if (in.peek() != EOF)
    throw ModelError(ModelError::Kind::Corrupt, "trailing bytes after model");

  // Re-derive the shape flow and check it against the recorded fan-ins.
  Network net;
  std::vector<Tensor> saved_w, saved_b;
  for (Layer& l : layers) {
    saved_w.push_back(std::move(l.weights));
    saved_b.push_back(std::move(l.bias));
  }
  try {
    net = build_network(input_shape, class_count, std::move(layers));
  } catch (const InvalidArgument& e) {
    throw ModelError(ModelError::Kind::Corrupt, e.what());
  }
  for (size_t i = 0; i < net.layers.size(); ++i) {
    if (!net.layers[i].has_params()) continue;
    if (net.layers[i].weights.shape != saved_w[i].shape)
      throw ModelError(ModelError::Kind::Corrupt,
                       "layer fan-in does not match network flow");
    net.layers[i].weights = std::move(saved_w[i]);
    net.layers[i].bias = std::move(saved_b[i]);
  }
  return net;
}

double gradient_check(const Network& net, const Tensor& input, int label,
                      double eps, bool perturb) {
  Network work = net;
  const Activations acts = forward(work, input);
  Gradients grads = backward(work, acts, label);

  if (perturb) {
    for (size_t i = 0; i < work.layers.size(); ++i) {
      if (!work.layers[i].has_params()) continue;
      grads.weights[i].values[0] += 1e-2;
      break;
    }
  }

  double max_rel = 0.0;
  auto check_tensor = [&](Tensor& param, const Tensor& grad) {
    for (size_t j = 0; j < param.values.size(); ++j) {
      const double saved = param.values[j];
      param.values[j] = saved + eps;
      const double lp =
          cross_entropy(forward(work, input).probabilities(), label);
      param.values[j] = saved - eps;
      const double lm =
          cross_entropy(forward(work, input).probabilities(), label);
      param.values[j] = saved;
      const double fd = (lp - lm) / (2.0 * eps);
      const double a = grad.values[j];
      const double rel = std::abs(a - fd) / std::max(std::abs(a) + std::abs(fd), 1e-5);
      max_rel = std::max(max_rel, rel);
    }
  };
  for (size_t i = 0; i < work.layers.size(); ++i) {
    if (!work.layers[i].has_params()) continue;
    check_tensor(work.layers[i].weights, grads.weights[i]);
    check_tensor(work.layers[i].bias, grads.bias[i]);
  }
  return max_rel;
}

}  // namespace alpr::nnet
