// Copyright (c) 2026 The facectl Authors
// SPDX-License-Identifier: Apache-2.0

#include <CLI11.hpp>

#include <csignal>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>

#include "facectl/edit_service.hpp"
#include "facectl/errors.hpp"
#include "facectl/evaluation.hpp"
#include "facectl/feature_stats.hpp"
#include "facectl/io.hpp"
#include "facectl/landmarks.hpp"
#include "facectl/learned_detector.hpp"
#include "facectl/training.hpp"

using namespace facectl;

namespace {

HttpServer* g_server = nullptr;

void on_signal(int) {
  if (g_server) g_server->stop();
}

int fit_stats_cmd(const std::string& backend_path, int samples, std::uint64_t seed, const std::string& stats_out,
                  const std::string& corr_out) {
  const Backbone backbone = make_backbone(load_backend_descriptor(backend_path));
  const auto corpus = feature_corpus(backbone, samples, seed);
  const FeatureStats stats =
      fit_stats(corpus, "synthetic:" + std::filesystem::path(backend_path).filename().string() + ":seed=" +
                            std::to_string(seed));
  save_stats(stats, stats_out);
  save_correlation(correlation_matrix(corpus), corr_out);
  std::fprintf(stderr, "fitted %d samples -> %s, %s\n", samples, stats_out.c_str(), corr_out.c_str());
  return 0;
}

int fit_detector_cmd(const std::string& backend_path, const std::string& out, DetectorTrainingOptions opts) {
  const BackendDescriptor d = load_backend_descriptor(backend_path);
  const Backbone backbone = make_backbone(d);
  const LearnedDetector det = LearnedDetector::fit(*backbone.generator, opts);
  det.save(out);
  std::fprintf(stderr, "detector saved to %s, held-out mean landmark error %.6f\n", out.c_str(),
               det.mean_error(*backbone.generator, 500, opts.seed + 1));
  return 0;
}

int train_cmd(const std::string& config_path, const std::string& out, std::optional<std::uint64_t> seed,
              std::optional<long long> steps, const std::string& backend, const std::string& metrics,
              const std::string& resume) {
  TrainingConfig cfg = load_training_config(config_path);
  if (seed) cfg.seed = *seed;
  if (steps) cfg.steps = *steps;
  if (!backend.empty()) cfg.backend = backend;

  const Backbone backbone = make_backbone(load_backend_descriptor(cfg.backend));
  const FeatureStats stats = load_stats(cfg.stats);
  const CorrelationMatrix corr = load_correlation(cfg.correlation);
  const std::filesystem::path log = metrics.empty() ? std::filesystem::path(out + ".metrics.jsonl") : std::filesystem::path(metrics);

  std::unique_ptr<Trainer> trainer;
  if (!resume.empty()) {
    trainer = std::make_unique<Trainer>(load_checkpoint(resume), backbone, stats, corr);
    std::fprintf(stderr, "resuming at step %lld\n", trainer->current_step());
  } else {
    trainer = std::make_unique<Trainer>(cfg, backbone, stats, corr);
  }
  std::fprintf(stderr, "training %lld steps, batch %d, lr %g, config %s\n", cfg.steps, cfg.batch_size,
               cfg.learning_rate, config_hash(cfg).c_str());
  trainer->run(out, log, [&](const StepRecord& r) {
    if (r.step % 250 == 0 || r.step == cfg.steps) {
      std::fprintf(stderr, "step %6lld  loss %.6f  pix %.6f  feat %.6f  sff %.4f  |k| %.3f\n", r.step,
                   r.result.loss.total, r.result.loss.pix, r.result.loss.feat, r.result.loss.sff,
                   r.result.mean_abs_scale);
    }
  });
  std::fprintf(stderr, "checkpoint written to %s\n", out.c_str());
  return 0;
}

int evaluate_cmd(const std::string& checkpoint, const EvalProtocol& protocol, const std::string& out) {
  const Model model = load_model(checkpoint);
  const EvalReport report = evaluate(model, protocol, std::filesystem::path(checkpoint).stem().string());
  const std::vector<EvalReport> reports{report};
  std::cout << format_report_table(reports);
  if (!out.empty()) write_report(reports, out);
  return 0;
}

int ablate_cmd(const std::string& config_path, const std::string& out, const EvalProtocol& protocol,
               std::optional<long long> steps) {
  TrainingConfig cfg = load_training_config(config_path);
  if (steps) cfg.steps = *steps;
  const auto rows =
      ablation_suite(cfg, protocol, out, [](const std::string& msg) { std::fprintf(stderr, "%s\n", msg.c_str()); });
  std::cout << format_ablation_table(rows);
  for (const auto& r : rows) {
    if (!r.ok) return 1;
  }
  return 0;
}

int serve_cmd(const std::string& checkpoint, const std::string& backend, const std::string& host, int port,
              const std::string& snapshots) {
  ServiceOptions opts;
  opts.snapshot_dir = snapshots;
  EditService service(load_model(checkpoint, backend), opts);
  HttpServer server(service, host, port);
  g_server = &server;
  std::signal(SIGINT, on_signal);
  std::signal(SIGTERM, on_signal);
  std::fprintf(stderr, "listening on http://%s:%d\n", host.c_str(), server.port());
  server.wait();
  g_server = nullptr;
  return 0;
}

int features_cmd(const std::string& path, std::optional<double> width, std::optional<double> height,
                 const std::string& stats_path) {
  std::ifstream in(path);
  if (!in) throw ConfigurationError("cannot open " + path);
  std::optional<ImageSize> size;
  if (width && height) size = ImageSize{*width, *height};
  const auto records = read_landmark_records(in, size);
  std::optional<FeatureStats> stats;
  if (!stats_path.empty()) stats = load_stats(stats_path);

  std::cout << "record";
  for (const auto& f : feature_catalog()) std::cout << '\t' << f.name;
  std::cout << '\n';
  for (std::size_t i = 0; i < records.size(); ++i) {
    FeatureVector v = compute_all_features(records[i]);
    if (stats) v = normalize(v, *stats);
    std::cout << i;
    for (double x : v) std::cout << '\t' << format_double(x);
    std::cout << '\n';
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Semantic face-feature editing in a generator latent space"};
  app.require_subcommand(1);

  std::string backend, out, stats_out = "stats.txt", corr_out = "correlation.txt";
  int samples = 10000;
  std::uint64_t seed = 0;
  auto* fit = app.add_subcommand("fit-stats", "Fit feature statistics and correlations on synthetic faces");
  fit->add_option("--backend", backend, "Backend descriptor")->required();
  fit->add_option("--samples", samples, "Corpus size")->capture_default_str();
  fit->add_option("--seed", seed, "Corpus seed")->capture_default_str();
  fit->add_option("--stats-out", stats_out)->capture_default_str();
  fit->add_option("--correlation-out", corr_out)->capture_default_str();

  DetectorTrainingOptions det_opts;
  auto* fitdet = app.add_subcommand("fit-detector", "Fit the learned landmark detector");
  fitdet->add_option("--backend", backend, "Backend descriptor")->required();
  fitdet->add_option("--out", out, "Detector file")->required();
  fitdet->add_option("--samples", det_opts.samples)->capture_default_str();
  fitdet->add_option("--ridge", det_opts.ridge)->capture_default_str();
  fitdet->add_option("--seed", det_opts.seed)->capture_default_str();

  std::string config, metrics, resume;
  std::optional<std::uint64_t> seed_override;
  std::optional<long long> steps_override;
  auto* train = app.add_subcommand("train", "Train an editor checkpoint");
  train->add_option("--config", config, "Training config (JSON)")->required();
  train->add_option("--out", out, "Checkpoint path")->required();
  train->add_option("--seed", seed_override, "Override the config seed");
  train->add_option("--steps", steps_override, "Override the step count");
  train->add_option("--backend", backend, "Override the backend descriptor");
  train->add_option("--metrics", metrics, "Metrics log (default <out>.metrics.jsonl)");
  train->add_option("--resume", resume, "Continue from this checkpoint");

  std::string checkpoint;
  EvalProtocol protocol;
  auto* eval = app.add_subcommand("evaluate", "Evaluate a checkpoint on random edits");
  eval->add_option("--checkpoint", checkpoint)->required();
  eval->add_option("--faces", protocol.faces)->capture_default_str();
  eval->add_option("--edits", protocol.edits_per_face)->capture_default_str();
  eval->add_option("--seed", protocol.seed)->capture_default_str();
  eval->add_option("--rounds", protocol.rounds, "Edit rounds per request")->capture_default_str();
  eval->add_option("--out", out, "Report path (text; JSON beside it)");

  auto* ablate = app.add_subcommand("ablate", "Train and evaluate the loss ablation variants");
  ablate->add_option("--config", config)->required();
  ablate->add_option("--out", out, "Output directory")->required();
  ablate->add_option("--faces", protocol.faces)->capture_default_str();
  ablate->add_option("--edits", protocol.edits_per_face)->capture_default_str();
  ablate->add_option("--seed", protocol.seed, "Evaluation seed")->capture_default_str();
  ablate->add_option("--steps", steps_override, "Override the step count");

  std::string host = "127.0.0.1", snapshots;
  int port = 8080;
  auto* serve = app.add_subcommand("serve", "Run the editing HTTP service");
  serve->add_option("--checkpoint", checkpoint)->required();
  serve->add_option("--backend", backend, "Override the backend descriptor");
  serve->add_option("--host", host)->capture_default_str();
  serve->add_option("--port", port)->capture_default_str();
  serve->add_option("--snapshots", snapshots, "Session snapshot directory");

  std::string landmarks, stats_path;
  std::optional<double> width, height;
  auto* feats = app.add_subcommand("features", "Compute the 23 features for landmark records");
  feats->add_option("--landmarks", landmarks, "One record of 98 (x, y) pairs per line")->required();
  feats->add_option("--width", width, "Image width for pixel coordinates");
  feats->add_option("--height", height, "Image height for pixel coordinates");
  feats->add_option("--stats", stats_path, "Normalize with these statistics");

  CLI11_PARSE(app, argc, argv);

  try {
    if (*fit) return fit_stats_cmd(backend, samples, seed, stats_out, corr_out);
    if (*fitdet) return fit_detector_cmd(backend, out, det_opts);
    if (*train) return train_cmd(config, out, seed_override, steps_override, backend, metrics, resume);
    if (*eval) return evaluate_cmd(checkpoint, protocol, out);
    if (*ablate) return ablate_cmd(config, out, protocol, steps_override);
    if (*serve) return serve_cmd(checkpoint, backend, host, port, snapshots);
    if (*feats) return features_cmd(landmarks, width, height, stats_path);
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 2;
  }
  return 0;
}
