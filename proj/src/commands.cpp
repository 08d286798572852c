#include "alpr/commands.hpp"

#include <atomic>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <numeric>
#include <sstream>
#include <thread>

#include "alpr/recognizer.hpp"
#include "alpr/synthgen.hpp"

namespace alpr::cmd {

uint64_t fnv1a(const void* data, size_t len, uint64_t h) {
  const auto* p = static_cast<const unsigned char*>(data);
  for (size_t i = 0; i < len; ++i) {
    h ^= p[i];
    h *= 0x100000001b3ull;
  }
  return h;
}

uint64_t checksum_file(const std::filesystem::path& path, uint64_t h) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path.string());
  char buf[4096];
  while (in.read(buf, sizeof buf) || in.gcount() > 0)
    h = fnv1a(buf, size_t(in.gcount()), h);
  return h;
}

namespace {

img::GrayImage patch_to_gray(const nnet::Tensor& t) {
  img::GrayImage g;
  g.height = t.shape[1];
  g.width = t.shape[2];
  g.data.resize(t.values.size());
  for (size_t i = 0; i < t.values.size(); ++i) {
    const double v = std::lround(t.values[i] * 255.0);
    g.data[i] = uint8_t(std::clamp(v, 0.0, 255.0));
  }
  return g;
}

void ensure_dir(const std::filesystem::path& dir) {
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec || !std::filesystem::is_directory(dir))
    throw IoError("cannot create directory " + dir.string());
}

SynthSummary write_patch_dir(const std::vector<nnet::Tensor>& patches,
                             const std::vector<char>& labels,
                             const std::filesystem::path& dir) {
  ensure_dir(dir);
  std::ofstream tsv(dir / "labels.tsv", std::ios::binary);
  if (!tsv) throw IoError("cannot write " + (dir / "labels.tsv").string());

  char name[32];
  std::vector<std::string> names;
  for (size_t i = 0; i < patches.size(); ++i) {
    std::snprintf(name, sizeof name, "%05zu.pgm", i);
    img::write_pgm(patch_to_gray(patches[i]), dir / name);
    tsv << name << '\t' << labels[i] << '\n';
    names.push_back(name);
  }
  tsv.close();

  SynthSummary s;
  s.files = int(patches.size()) + 1;
  s.checksum = checksum_file(dir / "labels.tsv", fnv1a("labels.tsv", 10));
  for (const std::string& n : names) {
    s.checksum = fnv1a(n.data(), n.size(), s.checksum);
    s.checksum = checksum_file(dir / n, s.checksum);
  }
  return s;
}

}  // namespace

SynthSummary synth_chars(int n_per_class, uint64_t seed,
                         const std::filesystem::path& out_dir) {
  const synth::LabeledPatches data = synth::make_char_dataset(n_per_class, seed);
  std::vector<char> labels;
  labels.reserve(data.labels.size());
  for (int l : data.labels) labels.push_back(ocr::label_to_char(l));
  return write_patch_dir(data.patches, labels, out_dir);
}

SynthSummary synth_negatives(int n, uint64_t seed,
                             const std::filesystem::path& out_dir) {
  const std::vector<nnet::Tensor> patches = synth::make_negative_dataset(n, seed);
  return write_patch_dir(patches, std::vector<char>(patches.size(), '-'),
                         out_dir);
}

SynthSummary synth_benchmark(int n, uint64_t seed,
                             const std::filesystem::path& out_dir) {
  const std::vector<synth::SceneSample> samples = synth::make_benchmark(n, seed);
  ensure_dir(out_dir);
  synth::write_benchmark(samples, out_dir);

  SynthSummary s;
  s.files = n + 1;
  s.checksum = checksum_file(out_dir / "manifest.tsv", fnv1a("manifest.tsv", 12));
  char name[32];
  for (size_t i = 0; i < samples.size(); ++i) {
    std::snprintf(name, sizeof name, "scenes/%04zu.pgm", i);
    s.checksum = fnv1a(name, std::strlen(name), s.checksum);
    s.checksum = checksum_file(out_dir / name, s.checksum);
  }
  return s;
}

PatchDataset load_patch_dir(const std::filesystem::path& dir) {
  std::ifstream tsv(dir / "labels.tsv", std::ios::binary);
  if (!tsv) throw IoError("cannot open " + (dir / "labels.tsv").string());
  PatchDataset data;
  std::string line;
  while (std::getline(tsv, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    const size_t tab = line.find('\t');
    if (tab == std::string::npos || tab + 2 != line.size())
      throw IoError("malformed labels.tsv in " + dir.string());
    const char label = line[tab + 1];
    data.inputs.push_back(ocr::to_tensor(img::read_pgm(dir / line.substr(0, tab))));
    data.labels.push_back(label == '-' ? -1 : ocr::char_to_label(label));
  }
  return data;
}

namespace {

struct Split {
  std::vector<nnet::Tensor> train_x, hold_x;
  std::vector<int> train_y, hold_y;
};

Split holdout_split(std::vector<nnet::Tensor> xs, std::vector<int> ys,
                    uint64_t seed) {
  std::vector<size_t> order(xs.size());
  std::iota(order.begin(), order.end(), size_t{0});
  Rng rng = Rng(seed).fork(0x484f4c44);  // holdout shuffle stream
  rng.shuffle(order);

  Split split;
  const size_t hold_n = std::max<size_t>(1, xs.size() / 10);
  for (size_t i = 0; i < order.size(); ++i) {
    const size_t idx = order[i];
    if (i < hold_n) {
      split.hold_x.push_back(std::move(xs[idx]));
      split.hold_y.push_back(ys[idx]);
    } else {
      split.train_x.push_back(std::move(xs[idx]));
      split.train_y.push_back(ys[idx]);
    }
  }
  return split;
}

TrainOutput train_and_save(nnet::Network net, std::vector<nnet::Tensor> xs,
                           std::vector<int> ys, const nnet::TrainConfig& cfg,
                           const std::filesystem::path& model_out) {
  if (xs.empty()) throw InvalidArgument("empty dataset");
  Split split = holdout_split(std::move(xs), std::move(ys), cfg.seed);

  Rng init_rng = Rng(cfg.seed).fork(0x494e4954);
  nnet::init_params(net, init_rng);

  TrainOutput out;
  out.result = nnet::train(net, split.train_x, split.train_y, cfg);
  out.holdout_accuracy = nnet::accuracy(net, split.hold_x, split.hold_y);
  out.train_count = split.train_x.size();
  out.holdout_count = split.hold_x.size();
  nnet::save_model(net, model_out);
  return out;
}

}  // namespace

TrainOutput train_detector(const std::filesystem::path& bench_dir,
                           const nnet::TrainConfig& cfg,
                           const std::filesystem::path& model_out) {
  const auto manifest = eval::read_manifest(bench_dir / "manifest.tsv");
  std::vector<std::pair<img::GrayImage, img::BBox>> annotated;
  annotated.reserve(manifest.size());
  for (const auto& e : manifest)
    annotated.emplace_back(img::read_pgm(bench_dir / e.filename), e.box);

  const detect::DetectorConfig det;
  synth::WindowSet windows = synth::make_detector_windows(
      annotated, det.window_h, det.window_w, cfg.seed);
  return train_and_save(nnet::plate_detector_arch(), std::move(windows.windows),
                        std::move(windows.labels), cfg, model_out);
}

TrainOutput train_filter(const std::filesystem::path& chars_dir,
                         const std::filesystem::path& negatives_dir,
                         const nnet::TrainConfig& cfg,
                         const std::filesystem::path& model_out) {
  PatchDataset chars = load_patch_dir(chars_dir);
  PatchDataset negs = load_patch_dir(negatives_dir);
  std::vector<nnet::Tensor> xs = std::move(chars.inputs);
  std::vector<int> ys(xs.size(), 1);
  for (auto& t : negs.inputs) {
    xs.push_back(std::move(t));
    ys.push_back(0);
  }
  return train_and_save(nnet::char_filter_arch(), std::move(xs), std::move(ys),
                        cfg, model_out);
}

TrainOutput train_recognizer(const std::filesystem::path& chars_dir,
                             const nnet::TrainConfig& cfg,
                             const std::filesystem::path& model_out) {
  PatchDataset chars = load_patch_dir(chars_dir);
  for (int y : chars.labels)
    if (y < 0)
      throw InvalidArgument("negative patches in recognizer training set");
  return train_and_save(nnet::char_recognizer_arch(), std::move(chars.inputs),
                        std::move(chars.labels), cfg, model_out);
}

namespace {

std::vector<std::vector<pipeline::PlateReading>> process_all(
    const std::vector<img::GrayImage>& images,
    const pipeline::ModelBundle& models, int jobs) {
  std::vector<std::vector<pipeline::PlateReading>> results(images.size());
  if (jobs <= 1) {
    for (size_t i = 0; i < images.size(); ++i)
      results[i] = pipeline::process_image(models, images[i]);
    return results;
  }
  std::atomic<size_t> next{0};
  auto worker = [&] {
    for (;;) {
      const size_t i = next.fetch_add(1);
      if (i >= images.size()) return;
      results[i] = pipeline::process_image(models, images[i]);
    }
  };
  std::vector<std::thread> pool;
  for (int t = 0; t < jobs; ++t) pool.emplace_back(worker);
  for (auto& t : pool) t.join();
  return results;
}

}  // namespace

eval::EvalReport run_benchmark(const std::filesystem::path& bench_dir,
                               const pipeline::ModelBundle& models,
                               const BenchOptions& options,
                               const std::filesystem::path& report_path) {
  const auto manifest = eval::read_manifest(bench_dir / "manifest.tsv");
  std::vector<img::GrayImage> scenes;
  scenes.reserve(manifest.size());
  for (const auto& e : manifest)
    scenes.push_back(img::read_pgm(bench_dir / e.filename));

  const auto readings = process_all(scenes, models, options.jobs);
  eval::EvalReport report = eval::evaluate(readings, manifest, options.eval_iou);
  if (!report_path.empty()) eval::write_report(report, report_path);
  return report;
}

std::vector<std::vector<pipeline::PlateReading>> run_read(
    const std::vector<std::filesystem::path>& images,
    const pipeline::ModelBundle& models, int jobs) {
  std::vector<img::GrayImage> loaded;
  loaded.reserve(images.size());
  for (const auto& p : images) loaded.push_back(img::read_image(p));
  return process_all(loaded, models, jobs);
}

namespace {

struct GradcheckNet {
  nnet::Network net;
  nnet::Tensor input;
  int label;
};

// Finite differences sit on a kink when a ReLU input is near zero; retry
// with the next derived seed until every margin is comfortable.
bool margins_ok(const nnet::Network& net, const nnet::Tensor& input) {
  const nnet::Activations acts = nnet::forward(net, input);
  for (size_t i = 0; i < net.layers.size(); ++i) {
    if (net.layers[i].kind != nnet::LayerKind::ReLU) continue;
    for (double v : acts.values[i].values)
      if (std::abs(v) < 1e-3) return false;
  }
  return true;
}

GradcheckNet build_case(std::vector<int> input_shape, int classes,
                        std::vector<nnet::Layer> layers, uint64_t seed) {
  for (uint64_t attempt = 0;; ++attempt) {
    nnet::Network net =
        nnet::build_network(input_shape, classes, layers);
    Rng rng = Rng(seed + attempt).fork(0x47434845);
    nnet::init_params(net, rng);
    nnet::Tensor input = nnet::Tensor::zeros(input_shape);
    for (double& v : input.values) v = rng.normal(0.0, 1.0);
    const int label = int(rng.below(uint64_t(classes)));
    if (margins_ok(net, input) || attempt >= 16)
      return {std::move(net), std::move(input), label};
  }
}

}  // namespace

std::vector<GradcheckRow> run_gradcheck(uint64_t seed, bool perturb) {
  using nnet::conv2d;
  using nnet::fully_connected;
  using nnet::maxpool;
  using nnet::relu;
  using nnet::softmax;
  constexpr double kEps = 1e-5;

  std::vector<GradcheckRow> rows;

  {
    GradcheckRow row{"Conv2D", 0.0};
    GradcheckNet a = build_case(
        {2, 7, 9}, 4, {conv2d(3, 3, 1, 1), fully_connected(4), softmax()},
        seed);
    row.max_rel_err = nnet::gradient_check(a.net, a.input, a.label, kEps, perturb);
    GradcheckNet b = build_case(
        {1, 8, 8}, 3, {conv2d(2, 3, 2, 0), fully_connected(3), softmax()},
        seed + 100);
    row.max_rel_err = std::max(
        row.max_rel_err, nnet::gradient_check(b.net, b.input, b.label, kEps));
    rows.push_back(row);
  }
  {
    GradcheckNet c = build_case({2, 6, 8}, 3,
                                {conv2d(2, 3, 1, 1), maxpool(),
                                 fully_connected(3), softmax()},
                                seed + 200);
    rows.push_back({"MaxPool", nnet::gradient_check(c.net, c.input, c.label,
                                                    kEps, perturb)});
  }
  {
    GradcheckNet c = build_case(
        {12}, 3,
        {fully_connected(8), relu(), fully_connected(3), softmax()},
        seed + 300);
    rows.push_back({"ReLU", nnet::gradient_check(c.net, c.input, c.label,
                                                 kEps, perturb)});
  }
  {
    GradcheckNet c =
        build_case({10}, 5, {fully_connected(5), softmax()}, seed + 400);
    rows.push_back({"FullyConnected",
                    nnet::gradient_check(c.net, c.input, c.label, kEps,
                                         perturb)});
  }
  {
    GradcheckNet c =
        build_case({6}, 4, {fully_connected(4), softmax()}, seed + 500);
    rows.push_back({"Softmax", nnet::gradient_check(c.net, c.input, c.label,
                                                    kEps, perturb)});
  }
  return rows;
}

}  // namespace alpr::cmd
