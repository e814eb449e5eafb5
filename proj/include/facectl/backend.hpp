// Copyright (c) 2026 The facectl Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <memory>
#include <span>
#include <string>
#include <vector>

#include "facectl/landmarks.hpp"
#include "facectl/tensor_types.hpp"

namespace facectl {

struct BackendDims {
  int n_styles = 4;
  int style_dim = 64;
  int height = 64;
  int width = 64;

  bool operator==(const BackendDims&) const = default;
};

enum class LandmarkMode { kOracleTap, kLearned };

std::string to_string(LandmarkMode mode);
LandmarkMode parse_landmark_mode(const std::string& s);

/// Everything needed to rebuild a backend bit-for-bit.
struct BackendDescriptor {
  std::string kind = "synthetic";
  std::uint64_t seed = 1;
  BackendDims dims;
  double stroke_sigma = 1.5;  // pixels
  LandmarkMode landmark_mode = LandmarkMode::kOracleTap;
  std::filesystem::path detector_path;  // learned mode only

  bool operator==(const BackendDescriptor&) const = default;
};

/// JSON text. Relative detector paths resolve against the descriptor's directory.
BackendDescriptor load_backend_descriptor(const std::filesystem::path& path);
void save_backend_descriptor(const BackendDescriptor& d, const std::filesystem::path& path);
std::string backend_descriptor_json(const BackendDescriptor& d);
BackendDescriptor parse_backend_descriptor(const std::string& json_text, const std::filesystem::path& base_dir = {});

struct SynthesisOutput {
  Image image;
  LandmarkSet landmarks;
  /// Final-stage activations, flattened (channels, rows, cols).
  std::vector<double> last_block_features;
};

/// Gradients of a scalar loss with respect to a SynthesisOutput. Empty
/// vectors mean "no gradient on this output".
struct SynthesisCotangent {
  std::vector<double> image;
  std::array<double, kNumCoords> landmarks{};
  std::vector<double> last_block_features;
};

/// Intermediate values a backend keeps from a forward pass for its backward pass.
class SynthesisTrace {
 public:
  virtual ~SynthesisTrace() = default;
};

struct TracedSynthesis {
  SynthesisOutput output;
  std::unique_ptr<SynthesisTrace> trace;
};

/// Mapping + synthesis network pair. Implementations are immutable after
/// construction and safe to call concurrently.
///
/// Adapter notes for real generators: `landmarks` must be reported in the
/// normalized frame (x / width, y / height, y down) and
/// `last_block_features` should be taken from the last style block; the
/// adapter documents whether that is pre- or post-activation.
class GeneratorBackend {
 public:
  virtual ~GeneratorBackend() = default;

  virtual BackendDims dims() const = 0;
  virtual BackendDescriptor descriptor() const = 0;

  /// z ~ N(0, I) of dimension style_dim, deterministic per seed.
  std::vector<double> sample_latent(std::uint64_t seed) const;

  /// z -> w, repeated n_styles times. Throws DomainError on dimension mismatch.
  virtual LatentCode map(std::span<const double> z) const = 0;

  virtual SynthesisOutput synthesize(const LatentCode& w) const = 0;
  virtual TracedSynthesis synthesize_traced(const LatentCode& w) const = 0;

  /// Vector-Jacobian product of synthesize() at the traced point.
  virtual LatentCode backward(const SynthesisTrace& trace, const SynthesisCotangent& cot) const = 0;

  /// Hash over every frozen parameter.
  virtual std::uint64_t parameter_checksum() const = 0;
};

class LandmarkDetector {
 public:
  virtual ~LandmarkDetector() = default;

  virtual LandmarkMode mode() const = 0;
  virtual bool ready() const = 0;

  /// Throws NotReadyError when not ready().
  virtual LandmarkSet detect(const SynthesisOutput& out) const = 0;

  /// Adds the pullback of `d_landmarks` into `cot` (image or landmark slot).
  virtual void backward(const SynthesisOutput& out, std::span<const double, kNumCoords> d_landmarks,
                        SynthesisCotangent& cot) const = 0;

  virtual std::uint64_t parameter_checksum() const = 0;
};

/// Frozen generator + detector pair.
struct Backbone {
  std::shared_ptr<const GeneratorBackend> generator;
  std::shared_ptr<const LandmarkDetector> detector;

  std::uint64_t checksum() const;
};

/// Builds the backbone a descriptor names. Learned landmark mode loads the
/// detector from `detector_path`.
Backbone make_backbone(const BackendDescriptor& d);

}  // namespace facectl
