// Copyright (c) 2026 The facectl Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <filesystem>

#include "facectl/backend.hpp"

namespace facectl {

struct DetectorTrainingOptions {
  int samples = 3000;
  double ridge = 1e-4;
  std::uint64_t seed = 7;
};

/// Landmark regressor that only sees pixels: a fixed convolutional stem
/// (2x2 and 4x4 stride-matched average pooling) followed by a linear head
/// fitted by ridge regression on (image, landmark) pairs from a backend.
/// Frozen after fitting; the whole map is linear in the image, so its
/// backward pass is exact.
class LearnedDetector final : public LandmarkDetector {
 public:
  LearnedDetector() = default;

  static LearnedDetector fit(const GeneratorBackend& backend, const DetectorTrainingOptions& options = {});
  static LearnedDetector load(const std::filesystem::path& path);
  void save(const std::filesystem::path& path) const;

  LandmarkMode mode() const override { return LandmarkMode::kLearned; }
  bool ready() const override { return head_.size() > 0; }
  LandmarkSet detect(const SynthesisOutput& out) const override;
  void backward(const SynthesisOutput& out, std::span<const double, kNumCoords> d_landmarks,
                SynthesisCotangent& cot) const override;
  std::uint64_t parameter_checksum() const override;

  /// Mean Euclidean landmark error (normalized units) on fresh backend samples.
  double mean_error(const GeneratorBackend& backend, int samples, std::uint64_t seed) const;

  int height() const { return height_; }
  int width() const { return width_; }

 private:
  Eigen::VectorXd stem(const Image& image) const;
  std::size_t stem_size() const;

  int height_ = 0;
  int width_ = 0;
  Eigen::MatrixXd head_;  // (stem features + 1) x 196
};

}  // namespace facectl
