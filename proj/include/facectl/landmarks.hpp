// Copyright (c) 2026 The facectl Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <array>
#include <cstddef>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace facectl {

inline constexpr std::size_t kNumLandmarks = 98;
inline constexpr std::size_t kNumCoords = 2 * kNumLandmarks;
inline constexpr std::size_t kNumFeatures = 23;

/// 98 facial keypoints in WFLW order.
///
/// Coordinates are normalized to the image: x in [0, 1] left to right,
/// y in [0, 1] top to bottom. Storage is interleaved (x0, y0, x1, y1, ...).
class LandmarkSet {
 public:
  LandmarkSet() { coords_.fill(0.0); }

  /// Throws DomainError unless `interleaved` holds 196 finite values.
  explicit LandmarkSet(std::span<const double> interleaved);

  static LandmarkSet filled(double x, double y);

  double x(std::size_t i) const { return coords_[2 * i]; }
  double y(std::size_t i) const { return coords_[2 * i + 1]; }
  void set(std::size_t i, double x, double y) {
    coords_[2 * i] = x;
    coords_[2 * i + 1] = y;
  }

  std::span<const double, kNumCoords> coords() const { return coords_; }
  std::span<double, kNumCoords> coords() { return coords_; }

  LandmarkSet translated(double dx, double dy) const;

  bool operator==(const LandmarkSet&) const = default;

 private:
  std::array<double, kNumCoords> coords_;
};

enum class FeatureCategory { kAbsoluteDistance, kRelativeDistance, kRelativeAnchorDistance };

std::string_view to_string(FeatureCategory category);

enum class Axis { kX, kY };

/// One signed coordinate read by a feature formula.
struct LandmarkTerm {
  int landmark;
  Axis axis;
  double coeff;

  std::size_t coord_index() const { return 2 * static_cast<std::size_t>(landmark) + (axis == Axis::kY ? 1 : 0); }
};

/// A semantic face feature: a fixed linear combination of landmark coordinates.
struct FeatureDefinition {
  int id;
  std::string name;
  FeatureCategory category;
  std::string formula;
  std::vector<LandmarkTerm> terms;
};

using FeatureVector = std::array<double, kNumFeatures>;

/// The 23 features in stable id order.
const std::vector<FeatureDefinition>& feature_catalog();

/// Throws DomainError for ids outside 0..22.
const FeatureDefinition& feature_definition(int id);

/// Case-insensitive lookup by name; std::nullopt if absent.
std::optional<int> find_feature(std::string_view name);

double compute_feature(const LandmarkSet& lm, int id);
FeatureVector compute_all_features(const LandmarkSet& lm);

/// d feature_id / d coords. Constant, since every formula is linear.
std::array<double, kNumCoords> feature_gradient(int id);

/// Pulls a gradient on the 23 features back onto the 196 coordinates.
void accumulate_feature_vjp(std::span<const double, kNumFeatures> d_features,
                            std::span<double, kNumCoords> d_coords);

/// Image size used to convert pixel landmarks to normalized coordinates.
struct ImageSize {
  double width;
  double height;
};

/// Parses one landmark record: 196 numbers (x0 y0 ... x97 y97), optionally
/// followed by width and height. Separators may be whitespace or commas.
/// When a size is present (inline or `default_size`), values are pixels.
LandmarkSet parse_landmark_record(std::string_view line, std::optional<ImageSize> default_size = std::nullopt);

/// Reads one record per non-empty line; lines starting with '#' are skipped.
std::vector<LandmarkSet> read_landmark_records(std::istream& in, std::optional<ImageSize> default_size = std::nullopt);

}  // namespace facectl
