// Copyright (c) 2026 The facectl Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <Eigen/Dense>
#include <array>
#include <cstdint>
#include <vector>

#include "facectl/backend.hpp"
#include "facectl/face_layout.hpp"
#include "facectl/raster.hpp"

namespace facectl {

/// Procedural stand-in for a style-based generator.
///
///   z --(frozen 2-layer MLP)--> w, broadcast to w+ (n x d)
///   w+ --(frozen tanh decoder, sigmoid squash)--> face parameters p
///   p --(analytic layout)--> 98 landmarks
///   landmarks --(tapered Gaussian strokes)--> channel maps C (K x H x W)
///   image = 1 - exp(-sum_k C_k);  last-block features = avg_pool(C)
///
/// All weights are drawn from the descriptor seed at construction and never change.
class SyntheticFaceWorld final : public GeneratorBackend {
 public:
  explicit SyntheticFaceWorld(const BackendDescriptor& descriptor);

  BackendDims dims() const override { return descriptor_.dims; }
  BackendDescriptor descriptor() const override { return descriptor_; }

  LatentCode map(std::span<const double> z) const override;
  SynthesisOutput synthesize(const LatentCode& w) const override;
  TracedSynthesis synthesize_traced(const LatentCode& w) const override;
  LatentCode backward(const SynthesisTrace& trace, const SynthesisCotangent& cot) const override;
  std::uint64_t parameter_checksum() const override;

  /// Face parameters decoded from w+, each inside its kParamRanges interval.
  std::array<double, face::kNumParams> decode(const LatentCode& w) const;

  raster::Grid feature_grid() const;
  int pool_factor() const { return pool_factor_; }
  std::size_t feature_size() const;

  static constexpr int kDecoderHidden = 64;
  static constexpr double kStrokeAmplitude = 0.35;
  static constexpr double kPupilAmplitude = 1.2;
  static constexpr double kPupilSigmaScale = 1.6;

 private:
  struct Decoded;
  Decoded run_decoder(const LatentCode& w) const;
  SynthesisOutput render(const std::array<double, kNumCoords>& landmarks, std::vector<raster::StrokePoint>* points_out,
                         std::vector<double>* maps_out) const;
  void check_shape(const LatentCode& w) const;

  BackendDescriptor descriptor_;
  int pool_factor_ = 1;

  // Mapping network.
  Eigen::MatrixXd map_w1_, map_w2_;
  Eigen::VectorXd map_b1_, map_b2_;
  // Decoder: hidden = tanh(dec_u * vec(w+) + dec_c), raw = dec_v * hidden + dec_b.
  Eigen::MatrixXd dec_u_, dec_v_;
  Eigen::VectorXd dec_c_, dec_b_;
};

/// Returns the analytic landmarks carried with the image.
class OracleTapDetector final : public LandmarkDetector {
 public:
  LandmarkMode mode() const override { return LandmarkMode::kOracleTap; }
  bool ready() const override { return true; }
  LandmarkSet detect(const SynthesisOutput& out) const override { return out.landmarks; }
  void backward(const SynthesisOutput& out, std::span<const double, kNumCoords> d_landmarks,
                SynthesisCotangent& cot) const override;
  std::uint64_t parameter_checksum() const override { return 0x6f7261636c65ULL; }
};

}  // namespace facectl
