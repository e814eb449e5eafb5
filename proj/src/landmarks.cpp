// Copyright (c) 2026 The facectl Authors
// SPDX-License-Identifier: Apache-2.0

#include "facectl/landmarks.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <cmath>
#include <istream>
#include <string>

#include "facectl/errors.hpp"

namespace facectl {

LandmarkSet::LandmarkSet(std::span<const double> interleaved) {
  if (interleaved.size() != kNumCoords) {
    throw DomainError("landmark set needs " + std::to_string(kNumCoords) + " coordinates, got " +
                      std::to_string(interleaved.size()));
  }
  for (std::size_t i = 0; i < kNumCoords; ++i) {
    if (!std::isfinite(interleaved[i])) throw DomainError("non-finite landmark coordinate at index " + std::to_string(i));
    coords_[i] = interleaved[i];
  }
}

LandmarkSet LandmarkSet::filled(double x, double y) {
  LandmarkSet lm;
  for (std::size_t i = 0; i < kNumLandmarks; ++i) lm.set(i, x, y);
  return lm;
}

LandmarkSet LandmarkSet::translated(double dx, double dy) const {
  LandmarkSet out = *this;
  for (std::size_t i = 0; i < kNumLandmarks; ++i) out.set(i, x(i) + dx, y(i) + dy);
  return out;
}

std::string_view to_string(FeatureCategory category) {
  switch (category) {
    case FeatureCategory::kAbsoluteDistance: return "absolute-distance";
    case FeatureCategory::kRelativeDistance: return "relative-distance";
    case FeatureCategory::kRelativeAnchorDistance: return "relative-anchor-distance";
  }
  return "unknown";
}

namespace {

using Terms = std::vector<LandmarkTerm>;

Terms x_diff(int a, int b) { return {{a, Axis::kX, 1.0}, {b, Axis::kX, -1.0}}; }
Terms y_diff(int a, int b) { return {{a, Axis::kY, 1.0}, {b, Axis::kY, -1.0}}; }

Terms concat(std::initializer_list<Terms> parts) {
  Terms out;
  for (const auto& p : parts) out.insert(out.end(), p.begin(), p.end());
  return out;
}

Terms y_sum(int first, int last) {
  Terms out;
  for (int i = first; i <= last; ++i) out.push_back({i, Axis::kY, 1.0});
  return out;
}

std::vector<FeatureDefinition> build_catalog() {
  constexpr auto kAbs = FeatureCategory::kAbsoluteDistance;
  constexpr auto kRel = FeatureCategory::kRelativeDistance;
  constexpr auto kAnchor = FeatureCategory::kRelativeAnchorDistance;

  std::vector<FeatureDefinition> c;
  auto add = [&c](std::string name, FeatureCategory cat, std::string formula, Terms terms) {
    c.push_back({static_cast<int>(c.size()), std::move(name), cat, std::move(formula), std::move(terms)});
  };

  // Eyes
  add("Eye width", kRel, "(x64 - x60) + (x72 - x68)", concat({x_diff(64, 60), x_diff(72, 68)}));
  add("Eye distance", kRel, "(x68 - x60) + (x72 - x64)", concat({x_diff(68, 60), x_diff(72, 64)}));
  add("Eye openness", kRel, "(y66 - y62) + (y74 - y70)", concat({y_diff(66, 62), y_diff(74, 70)}));
  add("Pupil position x", kAbs, "x96 + x97", {{96, Axis::kX, 1.0}, {97, Axis::kX, 1.0}});
  add("Pupil position y", kAbs, "y96 + y97", {{96, Axis::kY, 1.0}, {97, Axis::kY, 1.0}});
  // Eyebrows
  add("Eyebrow height", kAbs, "sum(y33..y50)", y_sum(33, 50));
  add("Eyebrow width", kRel, "(x37 - x33) + (x46 - x42)", concat({x_diff(37, 33), x_diff(46, 42)}));
  add("Eyebrow thickness", kRel, "(y41 - y34) + (y38 - y37) + (y50 - y42) + (y47 - y45)",
      concat({y_diff(41, 34), y_diff(38, 37), y_diff(50, 42), y_diff(47, 45)}));
  add("Eyebrow shape", kAnchor, "(y33 - y35) + (y37 - y35) + (y42 - y44) + (y46 - y44)",
      concat({y_diff(33, 35), y_diff(37, 35), y_diff(42, 44), y_diff(46, 44)}));
  // Nose
  add("Nose width", kRel, "x59 - x55", x_diff(59, 55));
  add("Nose length", kRel, "y57 - y51", y_diff(57, 51));
  add("Nose pointiness", kRel, "y57 - y54", y_diff(57, 54));
  // Mouth
  add("Mouth height", kAbs, "sum(y76..y88)", y_sum(76, 88));
  add("Mouth width", kRel, "x92 - x88", x_diff(92, 88));
  add("Mouth openness", kRel, "y94 - y90", y_diff(94, 90));
  add("Mouth shape", kAnchor, "(y76 - y90) + (y82 - y90)", concat({y_diff(76, 90), y_diff(82, 90)}));
  add("Upper lip thickness", kRel, "y90 - y79", y_diff(90, 79));
  add("Lower lip thickness", kRel, "y85 - y94", y_diff(85, 94));
  // Chin and jaw
  add("Chin length", kAbs, "y16", {{16, Axis::kY, 1.0}});
  add("Chin width", kRel, "x18 - x14", x_diff(18, 14));
  add("Chin shape", kAnchor, "(y14 - y16) + (y18 - y16)", concat({y_diff(14, 16), y_diff(18, 16)}));
  add("Jaw width", kRel, "x23 - x9", x_diff(23, 9));
  add("Temple width", kRel, "x32 - x0", x_diff(32, 0));
  return c;
}

std::string lower(std::string_view s) {
  std::string out(s);
  std::transform(out.begin(), out.end(), out.begin(), [](unsigned char ch) { return static_cast<char>(std::tolower(ch)); });
  return out;
}

}  // namespace

const std::vector<FeatureDefinition>& feature_catalog() {
  static const std::vector<FeatureDefinition> catalog = build_catalog();
  return catalog;
}

const FeatureDefinition& feature_definition(int id) {
  if (id < 0 || id >= static_cast<int>(kNumFeatures)) {
    throw DomainError("feature id " + std::to_string(id) + " outside 0.." + std::to_string(kNumFeatures - 1));
  }
  return feature_catalog()[static_cast<std::size_t>(id)];
}

std::optional<int> find_feature(std::string_view name) {
  const std::string key = lower(name);
  for (const auto& def : feature_catalog()) {
    if (lower(def.name) == key) return def.id;
  }
  return std::nullopt;
}

double compute_feature(const LandmarkSet& lm, int id) {
  const auto coords = lm.coords();
  double value = 0.0;
  for (const auto& t : feature_definition(id).terms) value += t.coeff * coords[t.coord_index()];
  return value;
}

FeatureVector compute_all_features(const LandmarkSet& lm) {
  FeatureVector out{};
  for (std::size_t i = 0; i < kNumFeatures; ++i) out[i] = compute_feature(lm, static_cast<int>(i));
  return out;
}

std::array<double, kNumCoords> feature_gradient(int id) {
  std::array<double, kNumCoords> g{};
  for (const auto& t : feature_definition(id).terms) g[t.coord_index()] += t.coeff;
  return g;
}

void accumulate_feature_vjp(std::span<const double, kNumFeatures> d_features, std::span<double, kNumCoords> d_coords) {
  const auto& catalog = feature_catalog();
  for (std::size_t f = 0; f < kNumFeatures; ++f) {
    if (d_features[f] == 0.0) continue;
    for (const auto& t : catalog[f].terms) d_coords[t.coord_index()] += t.coeff * d_features[f];
  }
}

LandmarkSet parse_landmark_record(std::string_view line, std::optional<ImageSize> default_size) {
  std::vector<double> values;
  values.reserve(kNumCoords + 2);
  std::size_t pos = 0;
  while (pos < line.size()) {
    while (pos < line.size() && (std::isspace(static_cast<unsigned char>(line[pos])) || line[pos] == ',')) ++pos;
    if (pos >= line.size()) break;
    double v = 0.0;
    const char* begin = line.data() + pos;
    auto [ptr, ec] = std::from_chars(begin, line.data() + line.size(), v);
    if (ec != std::errc{}) throw DomainError("malformed number in landmark record at column " + std::to_string(pos));
    values.push_back(v);
    pos = static_cast<std::size_t>(ptr - line.data());
  }

  std::optional<ImageSize> size = default_size;
  if (values.size() == kNumCoords + 2) {
    size = ImageSize{values[kNumCoords], values[kNumCoords + 1]};
    values.resize(kNumCoords);
  }
  if (values.size() != kNumCoords) {
    throw DomainError("landmark record needs 196 values (or 198 with width height), got " + std::to_string(values.size()));
  }
  if (size) {
    if (!(size->width > 0.0) || !(size->height > 0.0)) throw DomainError("image size must be positive");
    for (std::size_t i = 0; i < kNumCoords; i += 2) {
      values[i] /= size->width;
      values[i + 1] /= size->height;
    }
  }
  return LandmarkSet(values);
}

std::vector<LandmarkSet> read_landmark_records(std::istream& in, std::optional<ImageSize> default_size) {
  std::vector<LandmarkSet> out;
  std::string line;
  while (std::getline(in, line)) {
    const auto first = line.find_first_not_of(" \t\r");
    if (first == std::string::npos || line[first] == '#') continue;
    out.push_back(parse_landmark_record(line, default_size));
  }
  return out;
}

}  // namespace facectl
