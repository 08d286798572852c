#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "alpr/evalbench.hpp"
#include "alpr/net.hpp"
#include "alpr/pipeline.hpp"

// Batch operations behind the CLI subcommands, reusable from tests.
namespace alpr::cmd {

uint64_t fnv1a(const void* data, size_t len, uint64_t h = 0xcbf29ce484222325ull);
uint64_t checksum_file(const std::filesystem::path& path, uint64_t h);

struct SynthSummary {
  int files = 0;
  uint64_t checksum = 0;
};

/// Writes n*35 character patches as 24x24 PGMs plus labels.tsv.
SynthSummary synth_chars(int n_per_class, uint64_t seed,
                         const std::filesystem::path& out_dir);
/// Writes n negative patches (labels.tsv labels them '-').
SynthSummary synth_negatives(int n, uint64_t seed,
                             const std::filesystem::path& out_dir);
/// Writes n scenes plus manifest.tsv.
SynthSummary synth_benchmark(int n, uint64_t seed,
                             const std::filesystem::path& out_dir);

struct PatchDataset {
  std::vector<nnet::Tensor> inputs;
  std::vector<int> labels;  // -1 for negatives
};

/// Reads a labels.tsv patch directory back into tensors.
PatchDataset load_patch_dir(const std::filesystem::path& dir);

struct TrainOutput {
  nnet::TrainResult result;
  double holdout_accuracy = 0.0;
  size_t train_count = 0;
  size_t holdout_count = 0;
};

/// All trainers carve a deterministic 10% held-out split (seeded by
/// cfg.seed) before training and report accuracy on it.
TrainOutput train_detector(const std::filesystem::path& bench_dir,
                           const nnet::TrainConfig& cfg,
                           const std::filesystem::path& model_out);
TrainOutput train_filter(const std::filesystem::path& chars_dir,
                         const std::filesystem::path& negatives_dir,
                         const nnet::TrainConfig& cfg,
                         const std::filesystem::path& model_out);
TrainOutput train_recognizer(const std::filesystem::path& chars_dir,
                             const nnet::TrainConfig& cfg,
                             const std::filesystem::path& model_out);

struct BenchOptions {
  int jobs = 1;
  double eval_iou = 0.5;
};

/// Runs the pipeline over every manifest scene (optionally in parallel;
/// output is ordered by manifest regardless) and writes the report.
eval::EvalReport run_benchmark(const std::filesystem::path& bench_dir,
                               const pipeline::ModelBundle& models,
                               const BenchOptions& options,
                               const std::filesystem::path& report_path);

/// Per-image pipeline results for `read`, in input order.
std::vector<std::vector<pipeline::PlateReading>> run_read(
    const std::vector<std::filesystem::path>& images,
    const pipeline::ModelBundle& models, int jobs);

struct GradcheckRow {
  std::string layer;
  double max_rel_err = 0.0;
};

/// Finite-difference check of every layer kind on small random networks.
/// `perturb` is a test hook that corrupts one gradient.
std::vector<GradcheckRow> run_gradcheck(uint64_t seed, bool perturb = false);

inline constexpr double kGradcheckTolerance = 1e-4;

}  // namespace alpr::cmd
