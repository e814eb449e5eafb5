// Copyright (c) 2026 The facectl Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <atomic>
#include <cstdint>
#include <filesystem>
#include <random>
#include <string>
#include <unistd.h>

#include "facectl/backend.hpp"
#include "facectl/feature_stats.hpp"
#include "facectl/landmarks.hpp"
#include "facectl/random.hpp"
#include "facectl/training.hpp"

namespace facectl::testing {

/// n=2, d=8, 8x8.
inline BackendDescriptor tiny_descriptor() {
  BackendDescriptor d;
  d.dims = BackendDims{2, 8, 8, 8};
  d.stroke_sigma = 1.0;
  return d;
}

/// n=2, d=16, 32x32: small enough for fast tests, large enough to draw a face.
inline BackendDescriptor small_descriptor() {
  BackendDescriptor d;
  d.dims = BackendDims{2, 16, 32, 32};
  return d;
}

inline EditorConfig tiny_editor_config(const BackendDims& dims) {
  EditorConfig c;
  c.n_styles = dims.n_styles;
  c.style_dim = dims.style_dim;
  c.layers = 2;
  c.heads = 2;
  c.ffn_multiplier = 2;
  c.scale_hidden = 8;
  return c;
}

/// Backbone with statistics and correlations fitted on its own corpus.
struct World {
  Backbone backbone;
  FeatureStats stats;
  CorrelationMatrix corr;
};

inline World make_world(const BackendDescriptor& d, int samples = 2000, std::uint64_t seed = 99) {
  World w;
  w.backbone = make_backbone(d);
  const auto corpus = feature_corpus(w.backbone, samples, seed);
  w.stats = fit_stats(corpus, "test");
  w.corr = correlation_matrix(corpus);
  return w;
}

inline LandmarkSet random_landmarks(Rng& rng) {
  std::uniform_real_distribution<double> u(0.0, 1.0);
  LandmarkSet lm;
  for (std::size_t i = 0; i < kNumLandmarks; ++i) lm.set(i, u(rng), u(rng));
  return lm;
}

/// Removed with its contents on destruction.
class TempDir {
 public:
  TempDir() {
    static std::atomic<int> counter{0};
    path_ = std::filesystem::temp_directory_path() /
            ("facectl-test-" + std::to_string(::getpid()) + "-" + std::to_string(counter++));
    std::filesystem::create_directories(path_);
  }
  ~TempDir() {
    std::error_code ec;
    std::filesystem::remove_all(path_, ec);
  }
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;

  const std::filesystem::path& path() const { return path_; }
  std::filesystem::path operator/(const std::string& name) const { return path_ / name; }

 private:
  std::filesystem::path path_;
};

}  // namespace facectl::testing
