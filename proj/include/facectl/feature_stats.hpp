// Copyright (c) 2026 The facectl Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <array>
#include <cstddef>
#include <filesystem>
#include <span>
#include <string>

#include "facectl/landmarks.hpp"

namespace facectl {

/// Per-feature mean and sample standard deviation, plus the slider interval
/// (in normalized units) used by the editing UI.
struct FeatureStats {
  FeatureVector mean{};
  FeatureVector std{};
  FeatureVector slider_lo{};
  FeatureVector slider_hi{};
  std::size_t sample_count = 0;
  std::string corpus;
};

/// Symmetric, unit diagonal, entries in [-1, 1].
struct CorrelationMatrix {
  std::array<std::array<double, kNumFeatures>, kNumFeatures> entries{};

  double operator()(std::size_t i, std::size_t j) const { return entries[i][j]; }
};

inline constexpr double kSliderLowerPercentile = 0.02;
inline constexpr double kSliderUpperPercentile = 0.98;

/// Sample mean/std (divisor N-1). Slider bounds are the 2nd and 98th
/// percentiles of the normalized corpus.
/// Throws DegenerateStatisticsError for fewer than 2 samples or a constant feature.
FeatureStats fit_stats(std::span<const FeatureVector> dataset, std::string corpus = "unspecified");

FeatureVector normalize(const FeatureVector& v, const FeatureStats& s);
FeatureVector denormalize(const FeatureVector& v, const FeatureStats& s);

/// Pearson correlation over the dataset. Needs at least 3 samples and
/// variance in every feature.
CorrelationMatrix correlation_matrix(std::span<const FeatureVector> dataset);

// Text formats. Both are tab separated because feature names contain spaces.
void save_stats(const FeatureStats& s, const std::filesystem::path& path);
FeatureStats load_stats(const std::filesystem::path& path);
void save_correlation(const CorrelationMatrix& c, const std::filesystem::path& path);
CorrelationMatrix load_correlation(const std::filesystem::path& path);

}  // namespace facectl
