// Copyright (c) 2026 The facectl Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <array>
#include <cmath>
#include <span>
#include <vector>

#include "facectl/landmarks.hpp"

namespace facectl::face {

/// Parameters of the procedural face. All lengths are in normalized image
/// units; offsets are relative to the eye line (cx, cy).
enum Param : int {
  kCenterX,
  kCenterY,
  kFaceHalfWidth,
  kJawRatio,
  kChinHalfWidth,
  kChinDrop,
  kChinPoint,
  kTempleY,
  kEyeSeparation,
  kEyeHalfWidth,
  kEyeOpen,
  kPupilDx,
  kPupilDy,
  kBrowGap,
  kBrowHalfWidth,
  kBrowThickness,
  kBrowArch,
  kBrowTilt,
  kNoseTop,
  kNoseLength,
  kNoseTip,
  kNoseHalfWidth,
  kMouthY,
  kMouthHalfWidth,
  kMouthOpen,
  kUpperLip,
  kLowerLip,
  kMouthCorner,
  kNumParams
};

struct ParamRange {
  const char* name;
  double lo;
  double hi;
};

// Ranges keep every landmark inside [0.05, 0.95]^2 and the parts in their
// anatomical order (brow above eye, nose above mouth above chin).
inline constexpr std::array<ParamRange, kNumParams> kParamRanges{{
    {"center_x", 0.46, 0.54},
    {"center_y", 0.38, 0.46},
    {"face_half_width", 0.27, 0.33},
    {"jaw_ratio", 0.78, 0.92},
    {"chin_half_width", 0.06, 0.10},
    {"chin_drop", 0.33, 0.42},
    {"chin_point", 0.0, 0.025},
    {"temple_y", -0.05, 0.0},
    {"eye_separation", 0.085, 0.11},
    {"eye_half_width", 0.035, 0.05},
    {"eye_open", 0.008, 0.02},
    {"pupil_dx", -0.35, 0.35},
    {"pupil_dy", -0.35, 0.35},
    {"brow_gap", 0.045, 0.07},
    {"brow_half_width", 0.045, 0.065},
    {"brow_thickness", 0.008, 0.02},
    {"brow_arch", 0.0, 0.02},
    {"brow_tilt", -0.012, 0.012},
    {"nose_top", 0.0, 0.03},
    {"nose_length", 0.13, 0.17},
    {"nose_tip", 0.005, 0.025},
    {"nose_half_width", 0.03, 0.045},
    {"mouth_y", 0.22, 0.27},
    {"mouth_half_width", 0.06, 0.09},
    {"mouth_open", 0.0, 0.025},
    {"upper_lip", 0.008, 0.02},
    {"lower_lip", 0.01, 0.025},
    {"mouth_corner", -0.015, 0.015},
}};

/// Forward-mode dual number carrying N partial derivatives.
template <int N>
struct Dual {
  double v = 0.0;
  std::array<double, N> d{};

  Dual() = default;
  Dual(double value) : v(value) {}  // NOLINT: constants promote implicitly

  static Dual variable(double value, int index) {
    Dual x(value);
    x.d[static_cast<std::size_t>(index)] = 1.0;
    return x;
  }

  friend Dual operator+(Dual a, const Dual& b) {
    a.v += b.v;
    for (int i = 0; i < N; ++i) a.d[i] += b.d[i];
    return a;
  }
  friend Dual operator-(Dual a, const Dual& b) {
    a.v -= b.v;
    for (int i = 0; i < N; ++i) a.d[i] -= b.d[i];
    return a;
  }
  friend Dual operator*(const Dual& a, const Dual& b) {
    Dual r(a.v * b.v);
    for (int i = 0; i < N; ++i) r.d[i] = a.d[i] * b.v + a.v * b.d[i];
    return r;
  }
  friend Dual operator*(Dual a, double s) {
    a.v *= s;
    for (auto& x : a.d) x *= s;
    return a;
  }
  friend Dual operator*(double s, Dual a) { return a * s; }
  Dual operator-() const { return *this * -1.0; }
};

namespace detail {

// Piecewise-linear weights of the jaw half-width knots at contour position s
// (0 = chin center, 1 = temple). Knots: chin point, chin corner, jaw, temple.
inline std::array<double, 3> jaw_knot_weights(double s) {
  constexpr double kChin = 2.0 / 16.0, kJaw = 7.0 / 16.0;
  if (s <= kChin) return {s / kChin, 0.0, 0.0};
  if (s <= kJaw) {
    const double t = (s - kChin) / (kJaw - kChin);
    return {1.0 - t, t, 0.0};
  }
  const double t = (s - kJaw) / (1.0 - kJaw);
  return {0.0, 1.0 - t, t};
}

}  // namespace detail

/// Places the 98 WFLW landmarks from face parameters. Written once for any
/// scalar type so the Jacobian comes from Dual<kNumParams>.
template <typename T>
void layout_landmarks(std::span<const T, kNumParams> p, std::span<T, kNumCoords> out) {
  auto put = [&out](int i, const T& x, const T& y) {
    out[static_cast<std::size_t>(2 * i)] = x;
    out[static_cast<std::size_t>(2 * i + 1)] = y;
  };
  const T& cx = p[kCenterX];
  const T& cy = p[kCenterY];

  // Jaw contour 0..32, left temple -> chin (16) -> right temple.
  for (int k = 0; k <= 32; ++k) {
    const double u = k / 16.0 - 1.0;
    const double s = std::abs(u);
    const double side = u < 0.0 ? -1.0 : 1.0;
    const auto w = detail::jaw_knot_weights(s);
    const T half = p[kChinHalfWidth] * w[0] + p[kJawRatio] * p[kFaceHalfWidth] * w[1] + p[kFaceHalfWidth] * w[2];
    const double drop = std::cos(s * 1.5707963267948966);
    const double point = std::exp(-(s / 0.09) * (s / 0.09));
    const T y = cy + p[kTempleY] + (p[kChinDrop] - p[kTempleY]) * drop + p[kChinPoint] * point;
    put(k, cx + half * side, y);
  }

  // Eyebrows. t runs outer (-1) -> inner (+1) on the left brow; the right brow
  // is mirrored so its inner end is on the left.
  const T brow_base = cy - p[kBrowGap];
  auto brow_lower = [&](double t, double inner_sign) {
    return brow_base - p[kBrowArch] * (1.0 - t * t) - p[kBrowTilt] * (t * inner_sign);
  };
  auto brow_upper = [&](double t, double inner_sign) {
    return brow_lower(t, inner_sign) - p[kBrowThickness] * (0.75 + 0.25 * (1.0 - t * t));
  };
  constexpr std::array<double, 5> kUpperT{-1.0, -0.5, 0.0, 0.5, 1.0};
  constexpr std::array<double, 4> kLowerT{0.75, 0.25, -0.25, -0.75};
  {
    const T bx = cx - p[kEyeSeparation];
    for (int i = 0; i < 5; ++i) put(33 + i, bx + p[kBrowHalfWidth] * kUpperT[i], brow_upper(kUpperT[i], 1.0));
    for (int i = 0; i < 4; ++i) put(38 + i, bx + p[kBrowHalfWidth] * kLowerT[i], brow_lower(kLowerT[i], 1.0));
  }
  {
    const T bx = cx + p[kEyeSeparation];
    for (int i = 0; i < 5; ++i) put(42 + i, bx + p[kBrowHalfWidth] * kUpperT[i], brow_upper(kUpperT[i], -1.0));
    for (int i = 0; i < 4; ++i) put(47 + i, bx + p[kBrowHalfWidth] * kLowerT[i], brow_lower(kLowerT[i], -1.0));
  }

  // Nose: bridge 51..54 (54 = tip), base 55..59 (57 = center).
  const T nose_base = cy + p[kNoseLength];
  const T tip_y = nose_base - p[kNoseTip];
  const T top_y = cy + p[kNoseTop];
  for (int i = 0; i < 4; ++i) put(51 + i, cx, top_y + (tip_y - top_y) * (i / 3.0));
  constexpr std::array<double, 5> kNostrilX{-1.0, -0.5, 0.0, 0.5, 1.0};
  constexpr std::array<double, 5> kNostrilLift{0.6, 0.25, 0.0, 0.25, 0.6};
  for (int i = 0; i < 5; ++i) put(55 + i, cx + p[kNoseHalfWidth] * kNostrilX[i], nose_base - p[kNoseTip] * kNostrilLift[i]);

  // Eyes: left 60..67 (60 outer corner), right 68..75 (68 inner corner).
  const T& ew = p[kEyeHalfWidth];
  const T& eo = p[kEyeOpen];
  auto eye = [&](int first, const T& ex) {
    constexpr std::array<double, 8> kX{-1.0, -0.5, 0.0, 0.5, 1.0, 0.5, 0.0, -0.5};
    constexpr std::array<double, 8> kY{0.0, -0.85, -1.0, -0.85, 0.0, 0.68, 0.8, 0.68};
    for (int i = 0; i < 8; ++i) put(first + i, ex + ew * kX[i], cy + eo * kY[i]);
  };
  const T left_eye_x = cx - p[kEyeSeparation];
  const T right_eye_x = cx + p[kEyeSeparation];
  eye(60, left_eye_x);
  eye(68, right_eye_x);
  put(96, left_eye_x + p[kPupilDx] * ew, cy + p[kPupilDy] * eo);
  put(97, right_eye_x + p[kPupilDx] * ew, cy + p[kPupilDy] * eo);

  // Mouth: outer lip 76..87, inner lip 88..95.
  const T my = cy + p[kMouthY];
  const T& mw = p[kMouthHalfWidth];
  const T& mo = p[kMouthOpen];
  const T& mc = p[kMouthCorner];
  put(76, cx - mw, my + mc);
  put(82, cx + mw, my + mc);
  constexpr std::array<double, 5> kOuterX{-0.7, -0.35, 0.0, 0.35, 0.7};
  constexpr std::array<double, 5> kOuterOpen{0.75, 0.95, 1.0, 0.95, 0.75};
  constexpr std::array<double, 5> kOuterLip{0.7, 0.95, 1.0, 0.95, 0.7};
  constexpr std::array<double, 5> kOuterCorner{0.45, 0.1, 0.0, 0.1, 0.45};
  for (int i = 0; i < 5; ++i) {
    put(77 + i, cx + mw * kOuterX[i], my - mo * kOuterOpen[i] - p[kUpperLip] * kOuterLip[i] + mc * kOuterCorner[i]);
    // 83..87 run right -> left.
    put(83 + i, cx - mw * kOuterX[i], my + mo * kOuterOpen[i] + p[kLowerLip] * kOuterLip[i] + mc * kOuterCorner[i]);
  }
  put(88, cx - mw * 0.88, my + mc * 0.9);
  put(92, cx + mw * 0.88, my + mc * 0.9);
  constexpr std::array<double, 3> kInnerX{-0.45, 0.0, 0.45};
  constexpr std::array<double, 3> kInnerOpen{0.8, 1.0, 0.8};
  constexpr std::array<double, 3> kInnerCorner{0.2, 0.0, 0.2};
  for (int i = 0; i < 3; ++i) {
    put(89 + i, cx + mw * kInnerX[i], my - mo * kInnerOpen[i] + mc * kInnerCorner[i]);
    put(93 + i, cx - mw * kInnerX[i], my + mo * kInnerOpen[i] + mc * kInnerCorner[i]);
  }
}

/// Channels of the stroke rasterizer.
enum Channel : int { kContour, kBrows, kEyes, kNose, kMouth, kPupils, kNumChannels };

/// A polyline over landmark indices drawn into one channel.
struct Stroke {
  Channel channel;
  std::vector<int> path;
};

const std::vector<Stroke>& strokes();

}  // namespace facectl::face
