// Copyright (c) 2026 The facectl Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <array>
#include <string>

#include "facectl/landmarks.hpp"

namespace facectl::testing {

/// Second, hand-written evaluation of the 23 landmark formulas, kept
/// independent of the catalog's term lists.
inline std::array<double, 23> oracle_features(const LandmarkSet& lm) {
  auto x = [&](int i) { return lm.x(static_cast<std::size_t>(i)); };
  auto y = [&](int i) { return lm.y(static_cast<std::size_t>(i)); };
  double brow_sum = 0.0;
  for (int i = 33; i <= 50; ++i) brow_sum += y(i);
  double mouth_sum = 0.0;
  for (int i = 76; i <= 88; ++i) mouth_sum += y(i);
  return {
      (x(64) - x(60)) + (x(72) - x(68)),
      (x(68) - x(60)) + (x(72) - x(64)),
      (y(66) - y(62)) + (y(74) - y(70)),
      x(96) + x(97),
      y(96) + y(97),
      brow_sum,
      (x(37) - x(33)) + (x(46) - x(42)),
      (y(41) - y(34)) + (y(38) - y(37)) + (y(50) - y(42)) + (y(47) - y(45)),
      (y(33) - y(35)) + (y(37) - y(35)) + (y(42) - y(44)) + (y(46) - y(44)),
      x(59) - x(55),
      y(57) - y(51),
      y(57) - y(54),
      mouth_sum,
      x(92) - x(88),
      y(94) - y(90),
      (y(76) - y(90)) + (y(82) - y(90)),
      y(90) - y(79),
      y(85) - y(94),
      y(16),
      x(18) - x(14),
      (y(14) - y(16)) + (y(18) - y(16)),
      x(23) - x(9),
      x(32) - x(0),
  };
}

inline const std::array<std::string, 23>& oracle_feature_names() {
  static const std::array<std::string, 23> names{
      "Eye width",       "Eye distance",        "Eye openness",        "Pupil position x",   "Pupil position y",
      "Eyebrow height",  "Eyebrow width",       "Eyebrow thickness",   "Eyebrow shape",      "Nose width",
      "Nose length",     "Nose pointiness",     "Mouth height",        "Mouth width",        "Mouth openness",
      "Mouth shape",     "Upper lip thickness", "Lower lip thickness", "Chin length",        "Chin width",
      "Chin shape",      "Jaw width",           "Temple width"};
  return names;
}

/// Shift of each absolute feature under a translation (dx, dy); zero for the rest.
inline std::array<double, 23> oracle_translation_shift(double dx, double dy) {
  std::array<double, 23> s{};
  s[3] = 2.0 * dx;
  s[4] = 2.0 * dy;
  s[5] = 18.0 * dy;
  s[12] = 13.0 * dy;
  s[18] = dy;
  return s;
}

}  // namespace facectl::testing
