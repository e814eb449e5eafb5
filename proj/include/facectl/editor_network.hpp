// Copyright (c) 2026 The facectl Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "facectl/archive.hpp"
#include "facectl/backend.hpp"
#include "facectl/feature_stats.hpp"
#include "facectl/nn.hpp"
#include "facectl/tensor_types.hpp"

namespace facectl {

struct EditorConfig {
  int n_styles = 4;
  int style_dim = 64;
  int layers = 4;
  int heads = 4;
  int ffn_multiplier = 4;
  int scale_hidden = 32;
  /// Standard deviation of the output projection at initialization.
  double output_init_std = 0.04;

  bool operator==(const EditorConfig&) const = default;
};

struct FeatureEmbedding {
  std::vector<double> vector;
};

/// Activations kept by EditorNetwork::forward for the backward pass.
struct EditorCache {
  int batch = 0;
  std::vector<int> features;
  std::vector<nn::EncoderBlock::Cache> blocks;
  nn::LayerNorm::Cache final_norm;
  nn::Matrix encoded;       // batch*(n+1) x d after the final norm
  nn::Matrix kept;          // batch*n x d, embedding positions removed
  nn::Matrix scale_input;   // batch x (2+d)
  nn::Matrix scale_h1_pre, scale_h1, scale_h2_pre, scale_h2;
};

struct EditorOutputs {
  std::vector<ManipulationVector> manipulation;
  std::vector<double> scale;
};

/// Feature embedding table, transformer encoder over [w_1 .. w_n, e_j] with
/// learned positional embeddings, output projection to s_e, and the scaling
/// network over [m_current, m_target, e_j].
class EditorNetwork {
 public:
  explicit EditorNetwork(EditorConfig config = {}, std::uint64_t seed = 0);

  const EditorConfig& config() const { return config_; }

  /// Throws DomainError for ids outside 0..22.
  FeatureEmbedding embed(int feature_id) const;

  /// Throws DomainError when w or e do not match the configured shape.
  ManipulationVector predict_manipulation(const LatentCode& w, const FeatureEmbedding& e) const;
  double predict_scale(double m_current, double m_target, const FeatureEmbedding& e) const;

  /// Encoder output after the final norm, one row per token; the last row is
  /// the embedding position.
  nn::Matrix encode(const LatentCode& w, const FeatureEmbedding& e) const;
  /// Output projection over rows 0..n-1 of an encode() result.
  ManipulationVector project(const nn::Matrix& encoded) const;

  /// Batched forward over samples (w_b, j_b, current_b, target_b).
  EditorOutputs forward(std::span<const LatentCode> latents, std::span<const int> features,
                        std::span<const double> current, std::span<const double> target, EditorCache* cache) const;
  /// Accumulates parameter gradients for dL/ds_e and dL/dk.
  void backward(const EditorCache& cache, std::span<const ManipulationVector> d_manipulation,
                std::span<const double> d_scale);

  std::vector<nn::Parameter*> parameters();
  std::vector<const nn::Parameter*> parameters() const;
  /// Throws DomainError for unknown names.
  nn::Parameter& parameter(const std::string& name);
  std::size_t parameter_count() const;
  std::uint64_t parameter_checksum() const;

  bool trained() const { return trained_; }
  void set_trained(bool t) { trained_ = t; }

  Archive to_archive() const;
  /// Throws ConfigurationError when tensors are missing or mis-shaped.
  static EditorNetwork from_archive(const Archive& a);

 private:
  nn::Matrix tokens(std::span<const LatentCode> latents, std::span<const nn::Matrix> embeddings) const;
  nn::Matrix run_encoder(const nn::Matrix& x, int batch, EditorCache* cache) const;
  nn::Matrix scale_forward(const nn::Matrix& input, EditorCache* cache) const;
  void check_latent(const LatentCode& w) const;

  EditorConfig config_;
  nn::Parameter embedding_;   // 23 x d
  nn::Parameter positional_;  // (n+1) x d
  std::vector<nn::EncoderBlock> blocks_;
  nn::LayerNorm final_norm_;
  nn::Linear output_;
  nn::Linear scale1_, scale2_, scale3_;
  bool trained_ = false;
};

/// Backend outputs and normalized features for one latent.
struct Measurement {
  SynthesisOutput output;
  FeatureVector normalized{};
};

Measurement measure(const Backbone& backbone, const FeatureStats& stats, const LatentCode& w);

struct EditResult {
  int feature = 0;
  double target = 0.0;
  double scale = 0.0;  // k
  ManipulationVector manipulation;  // s_e
  LatentCode original_latent;
  LatentCode edited_latent;
  Measurement before;
  Measurement after;
};

/// One application of w+_edit = w+ + k * s_e. Throws NotReadyError for an
/// untrained editor and DomainError for a bad feature id or non-finite target.
EditResult edit(const EditorNetwork& editor, const Backbone& backbone, const FeatureStats& stats, const LatentCode& w,
                int feature_id, double target);
/// Same, reusing a measurement of w that the caller already has.
EditResult edit(const EditorNetwork& editor, const Backbone& backbone, const FeatureStats& stats, const LatentCode& w,
                const Measurement& current, int feature_id, double target);

struct IterativeEditResult {
  std::vector<EditResult> rounds;
  const EditResult& final_round() const { return rounds.back(); }
};

/// Applies edit() `rounds` times, feeding each edited latent back in.
IterativeEditResult iterative_edit(const EditorNetwork& editor, const Backbone& backbone, const FeatureStats& stats,
                                   const LatentCode& w, int feature_id, double target, int rounds = 3);

}  // namespace facectl
