// Copyright (c) 2026 The facectl Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <memory>
#include <span>
#include <string>
#include <vector>

#include "facectl/backend.hpp"
#include "facectl/editor_network.hpp"
#include "facectl/feature_stats.hpp"
#include "facectl/losses.hpp"
#include "facectl/nn.hpp"

namespace facectl {

struct TrainingConfig {
  LossWeights weights;
  double learning_rate = 2e-5;
  int batch_size = 16;
  long long steps = 5000;
  std::uint64_t seed = 0;
  std::filesystem::path backend;
  std::filesystem::path stats;
  std::filesystem::path correlation;
  /// n_styles and style_dim are taken from the backend.
  EditorConfig editor;
  long long log_every = 1;
  long long checkpoint_every = 0;

  bool operator==(const TrainingConfig&) const = default;
};

/// JSON. Relative paths resolve against `base_dir`.
TrainingConfig parse_training_config(const std::string& json_text, const std::filesystem::path& base_dir = {});
/// Relative paths resolve to absolute ones against the file's directory.
TrainingConfig load_training_config(const std::filesystem::path& path);
std::string training_config_json(const TrainingConfig& c);
/// Hex FNV-1a of the canonical JSON form.
std::string config_hash(const TrainingConfig& c);

/// Raw (unnormalized) feature vectors of `samples` random faces; face i uses
/// latent seed derive_seed(seed, {i}).
std::vector<FeatureVector> feature_corpus(const Backbone& backbone, int samples, std::uint64_t seed);

struct TrainingSample {
  std::uint64_t seed = 0;
  LatentCode latent;
  int feature = 0;
  double target = 0.0;
  Measurement original;
};

/// Draws z, j and m_target from `sample_seed`: z ~ N(0, I), j uniform over
/// 0..22, target ~ N(0, 1).
TrainingSample make_sample(const Backbone& backbone, const FeatureStats& stats, std::uint64_t sample_seed);
/// Sample b of a step uses derive_seed(seed, {step, b}).
std::vector<TrainingSample> sample_batch(const Backbone& backbone, const FeatureStats& stats, int batch_size,
                                         std::uint64_t seed, long long step);

struct BatchResult {
  LossTerms loss;
  double mean_abs_scale = 0.0;
  double mean_manipulation_norm = 0.0;
};

/// Runs the editor and the frozen backbone on a batch and returns the batch
/// loss. With `accumulate_gradients`, adds d(loss.total)/d(params) into the
/// editor's gradient buffers.
BatchResult batch_loss(EditorNetwork& editor, const Backbone& backbone, const FeatureStats& stats,
                       const CorrelationMatrix& corr, const LossWeights& weights,
                       std::span<const TrainingSample> batch, bool accumulate_gradients);

struct Checkpoint {
  static constexpr int kFormatVersion = 1;

  EditorNetwork editor;
  TrainingConfig config;
  std::string config_hash;
  long long step = 0;
  std::uint64_t backbone_checksum = 0;
  long long optimizer_steps = 0;
  std::vector<nn::Matrix> adam_m;
  std::vector<nn::Matrix> adam_v;
};

void save_checkpoint(const Checkpoint& c, const std::filesystem::path& path);
/// Throws ConfigurationError on a bad file or an unsupported version.
Checkpoint load_checkpoint(const std::filesystem::path& path);

/// A checkpoint with the frozen pieces it references.
struct Model {
  Checkpoint checkpoint;
  Backbone backbone;
  FeatureStats stats;
  CorrelationMatrix correlation;
};

/// Throws ConfigurationError when the rebuilt backbone's checksum differs
/// from the one recorded in the checkpoint. `backend_override` replaces the
/// descriptor the checkpoint references.
Model load_model(const std::filesystem::path& checkpoint_path, const std::filesystem::path& backend_override = {});

struct StepRecord {
  long long step = 0;
  BatchResult result;
  double seconds = 0.0;
};

std::string metrics_record_json(const StepRecord& r);

class Trainer {
 public:
  Trainer(TrainingConfig config, Backbone backbone, FeatureStats stats, CorrelationMatrix corr);
  /// Continues from `resume`, which must carry the same config hash.
  Trainer(const Checkpoint& resume, Backbone backbone, FeatureStats stats, CorrelationMatrix corr);
  Trainer(const Trainer&) = delete;
  Trainer& operator=(const Trainer&) = delete;

  /// One optimizer step. Throws TrainingAborted on a non-finite loss or
  /// gradient, naming the step and sample seeds.
  StepRecord step();

  /// Steps until config.steps, appending records to `metrics_log` (if not
  /// empty) and writing checkpoints to `checkpoint_out`. Throws
  /// ContractViolation if the backbone checksum changes.
  void run(const std::filesystem::path& checkpoint_out, const std::filesystem::path& metrics_log = {},
           const std::function<void(const StepRecord&)>& progress = {});

  Checkpoint checkpoint() const;
  const EditorNetwork& editor() const { return *editor_; }
  long long current_step() const { return step_; }
  const TrainingConfig& config() const { return config_; }

 private:
  void verify_backbone() const;

  TrainingConfig config_;
  Backbone backbone_;
  FeatureStats stats_;
  CorrelationMatrix corr_;
  std::uint64_t backbone_checksum_ = 0;
  std::unique_ptr<EditorNetwork> editor_;
  std::unique_ptr<nn::Adam> adam_;
  long long step_ = 0;
};

/// Editor shape for a backend: config.editor with the backend's n and d.
EditorConfig editor_config_for(const TrainingConfig& config, const BackendDims& dims);

}  // namespace facectl
