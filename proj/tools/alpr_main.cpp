#include <cstdio>
#include <filesystem>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "alpr/commands.hpp"
#include "alpr/recognizer.hpp"

namespace {

// Exit codes: 0 success, 1 check failure, 2 I/O, 3 model/dataset, 4 manifest.
// CLI usage errors exit with 64.
enum ExitCode { kOk = 0, kCheckFailed = 1, kIoFailed = 2, kModelFailed = 3, kManifestFailed = 4 };

struct DetectorFlags {
  double score_thresh = -1.0;
  double iou_thresh = -1.0;
  double scale_step = -1.0;
  int stride = -1;
  double charness_thresh = -1.0;

  void add_to(CLI::App* app) {
    app->add_option("--score-thresh", score_thresh, "detector score threshold");
    app->add_option("--iou-thresh", iou_thresh, "NMS IoU threshold");
    app->add_option("--scale-step", scale_step, "pyramid scale step");
    app->add_option("--stride", stride, "scan stride in pixels");
    app->add_option("--charness-thresh", charness_thresh,
                    "character filter threshold");
  }

  void apply(alpr::pipeline::PipelineConfig& cfg) const {
    if (score_thresh >= 0.0) cfg.detector.score_thresh = score_thresh;
    if (iou_thresh >= 0.0) cfg.detector.iou_thresh = iou_thresh;
    if (scale_step > 0.0) cfg.detector.scale_step = scale_step;
    if (stride > 0) cfg.detector.stride = stride;
    if (charness_thresh >= 0.0) cfg.charness_thresh = charness_thresh;
  }
};

void print_reading_line(const std::string& name,
                        const std::vector<alpr::pipeline::PlateReading>& readings) {
  std::printf("%s\t%zu", name.c_str(), readings.size());
  for (const auto& r : readings) {
    std::printf("\t%d,%d,%d,%d\t%.6f\t%s\t", r.detection.bbox.x,
                r.detection.bbox.y, r.detection.bbox.w, r.detection.bbox.h,
                r.detection.score, r.text.empty() ? "-" : r.text.c_str());
    if (r.chars.empty()) {
      std::printf("-");
    } else {
      for (size_t i = 0; i < r.chars.size(); ++i)
        std::printf("%s%.4f", i ? ";" : "", r.chars[i].confidence);
    }
  }
  std::printf("\n");
}

void print_train_output(const alpr::cmd::TrainOutput& out,
                        const std::string& model_path) {
  for (size_t e = 0; e < out.result.epoch_loss.size(); ++e)
    std::printf("epoch=%zu loss=%.6f\n", e + 1, out.result.epoch_loss[e]);
  std::printf("train_n=%zu holdout_n=%zu holdout_accuracy=%.4f\n",
              out.train_count, out.holdout_count, out.holdout_accuracy);
  std::printf("model=%s\n", model_path.c_str());
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"License plate detection and recognition toolkit"};
  app.require_subcommand(1);

  uint64_t seed = 42;

  // synth
  auto* synth = app.add_subcommand("synth", "generate synthetic data");
  synth->require_subcommand(1);
  int synth_n = 100;
  std::string synth_out;
  for (const char* kind : {"chars", "negatives", "benchmark"}) {
    auto* sub = synth->add_subcommand(kind);
    sub->add_option("--n", synth_n, "count (per class for chars)");
    sub->add_option("--seed", seed, "PRNG seed");
    sub->add_option("--out", synth_out, "output directory")->required();
  }

  // train
  auto* train = app.add_subcommand("train", "train a model");
  train->require_subcommand(1);
  std::string data_dir, chars_dir, negatives_dir, model_out;
  alpr::nnet::TrainConfig tcfg;
  auto add_train_flags = [&](CLI::App* sub) {
    sub->add_option("--seed", seed, "PRNG seed");
    sub->add_option("--lr", tcfg.learning_rate, "learning rate");
    sub->add_option("--momentum", tcfg.momentum, "momentum coefficient");
    sub->add_option("--batch", tcfg.batch_size, "minibatch size");
    sub->add_option("--epochs", tcfg.epochs, "epoch count");
    sub->add_option("--out", model_out, "model output path")->required();
  };
  auto* train_det = train->add_subcommand("detector");
  train_det->add_option("--data", data_dir, "benchmark-style directory")
      ->required();
  add_train_flags(train_det);
  auto* train_fil = train->add_subcommand("filter");
  train_fil->add_option("--chars", chars_dir, "character patch directory")
      ->required();
  train_fil->add_option("--negatives", negatives_dir, "negative patch directory")
      ->required();
  add_train_flags(train_fil);
  auto* train_rec = train->add_subcommand("recognizer");
  train_rec->add_option("--chars", chars_dir, "character patch directory")
      ->required();
  add_train_flags(train_rec);

  // read
  auto* read = app.add_subcommand("read", "read plates from images");
  std::string det_path, fil_path, rec_path, report_path, bench_dir;
  std::vector<std::string> image_paths;
  int jobs = 1;
  DetectorFlags dflags;
  read->add_option("--detector", det_path)->required();
  read->add_option("--filter", fil_path)->required();
  read->add_option("--recognizer", rec_path)->required();
  read->add_option("--jobs", jobs, "parallel workers");
  read->add_option("images", image_paths, "input images (PGM/PPM)")
      ->required();
  dflags.add_to(read);

  // bench
  auto* bench = app.add_subcommand("bench", "run a benchmark and report");
  bench->add_option("--dir", bench_dir, "benchmark directory")->required();
  bench->add_option("--detector", det_path)->required();
  bench->add_option("--filter", fil_path)->required();
  bench->add_option("--recognizer", rec_path)->required();
  bench->add_option("--report", report_path, "report output path")->required();
  bench->add_option("--jobs", jobs, "parallel workers");
  dflags.add_to(bench);

  // gradcheck
  auto* gradcheck = app.add_subcommand("gradcheck", "finite-difference check");
  bool perturb = false;
  gradcheck->add_option("--seed", seed, "PRNG seed");
  gradcheck->add_flag("--perturb", perturb,
                      "test hook: corrupt one gradient");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 64;
  }

  try {
    if (synth->parsed()) {
      alpr::cmd::SynthSummary s;
      const char* what = "";
      if (synth->got_subcommand("chars")) {
        s = alpr::cmd::synth_chars(synth_n, seed, synth_out);
        what = "chars";
        std::printf("%s=%d ", what, synth_n * 35);
      } else if (synth->got_subcommand("negatives")) {
        s = alpr::cmd::synth_negatives(synth_n, seed, synth_out);
        what = "negatives";
        std::printf("%s=%d ", what, synth_n);
      } else {
        s = alpr::cmd::synth_benchmark(synth_n, seed, synth_out);
        what = "scenes";
        std::printf("%s=%d ", what, synth_n);
      }
      std::printf("files=%d dir=%s checksum=%016llx\n", s.files,
                  synth_out.c_str(), static_cast<unsigned long long>(s.checksum));
      return kOk;
    }

    if (train->parsed()) {
      tcfg.seed = seed;
      try {
        alpr::cmd::TrainOutput out;
        if (train->got_subcommand("detector"))
          out = alpr::cmd::train_detector(data_dir, tcfg, model_out);
        else if (train->got_subcommand("filter"))
          out = alpr::cmd::train_filter(chars_dir, negatives_dir, tcfg,
                                        model_out);
        else
          out = alpr::cmd::train_recognizer(chars_dir, tcfg, model_out);
        print_train_output(out, model_out);
      } catch (const alpr::InvalidArgument& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return kModelFailed;  // dataset problems (e.g. empty dataset)
      }
      return kOk;
    }

    if (read->parsed() || bench->parsed()) {
      alpr::pipeline::ModelBundle models =
          alpr::pipeline::load_models(det_path, fil_path, rec_path);
      dflags.apply(models.config);
      if (read->parsed()) {
        std::vector<std::filesystem::path> paths(image_paths.begin(),
                                                 image_paths.end());
        const auto all = alpr::cmd::run_read(paths, models, jobs);
        for (size_t i = 0; i < all.size(); ++i)
          print_reading_line(image_paths[i], all[i]);
      } else {
        alpr::cmd::BenchOptions options;
        options.jobs = jobs;
        const alpr::eval::EvalReport report = alpr::cmd::run_benchmark(
            bench_dir, models, options, report_path);
        std::printf(
            "precision=%.6f recall=%.6f mean_plate_score=%.6f "
            "exact_match_rate=%.6f report=%s\n",
            report.precision, report.recall, report.mean_plate_score,
            report.exact_match_rate, report_path.c_str());
      }
      return kOk;
    }

    if (gradcheck->parsed()) {
      bool ok = true;
      for (const auto& row : alpr::cmd::run_gradcheck(seed, perturb)) {
        const bool pass = row.max_rel_err <= alpr::cmd::kGradcheckTolerance;
        ok = ok && pass;
        std::printf("%-16s %.3e %s\n", row.layer.c_str(), row.max_rel_err,
                    pass ? "ok" : "FAIL");
      }
      std::printf("gradcheck=%s\n", ok ? "pass" : "fail");
      return ok ? kOk : kCheckFailed;
    }
  } catch (const alpr::ModelError& e) {
    std::fprintf(stderr, "model error: %s\n", e.what());
    return kModelFailed;
  } catch (const alpr::ManifestError& e) {
    std::fprintf(stderr, "manifest error: %s\n", e.what());
    return kManifestFailed;
  } catch (const alpr::IoError& e) {
    std::fprintf(stderr, "io error: %s\n", e.what());
    return kIoFailed;
  } catch (const alpr::Error& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return kIoFailed;
  }
  return kOk;
}
