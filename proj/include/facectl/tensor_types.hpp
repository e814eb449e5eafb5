// Copyright (c) 2026 The facectl Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstddef>
#include <span>
#include <vector>

namespace facectl {

/// Single-channel raster with values in [0, 1], row-major.
struct Image {
  int height = 0;
  int width = 0;
  std::vector<double> pixels;

  Image() = default;
  Image(int h, int w, double fill = 0.0) : height(h), width(w), pixels(static_cast<std::size_t>(h) * w, fill) {}

  double at(int r, int c) const { return pixels[static_cast<std::size_t>(r) * width + c]; }
  double& at(int r, int c) { return pixels[static_cast<std::size_t>(r) * width + c]; }
  std::size_t size() const { return pixels.size(); }

  bool operator==(const Image&) const = default;
};

/// n style vectors of dimension d, row-major.
class StyleMatrix {
 public:
  StyleMatrix() = default;
  StyleMatrix(int n_styles, int style_dim);
  /// Throws DomainError when the value count or any value is not finite.
  StyleMatrix(int n_styles, int style_dim, std::vector<double> values);

  int n_styles() const { return n_; }
  int style_dim() const { return d_; }
  std::size_t size() const { return values_.size(); }

  std::span<const double> row(int i) const { return {values_.data() + static_cast<std::size_t>(i) * d_, static_cast<std::size_t>(d_)}; }
  std::span<double> row(int i) { return {values_.data() + static_cast<std::size_t>(i) * d_, static_cast<std::size_t>(d_)}; }
  std::span<const double> values() const { return values_; }
  std::span<double> values() { return values_; }

  double operator()(int r, int c) const { return values_[static_cast<std::size_t>(r) * d_ + c]; }
  double& operator()(int r, int c) { return values_[static_cast<std::size_t>(r) * d_ + c]; }

  bool same_shape(const StyleMatrix& o) const { return n_ == o.n_ && d_ == o.d_; }
  bool operator==(const StyleMatrix&) const = default;

 private:
  int n_ = 0;
  int d_ = 0;
  std::vector<double> values_;
};

/// Extended latent w+: one style vector per synthesis layer.
struct LatentCode : StyleMatrix {
  using StyleMatrix::StyleMatrix;

  /// Repeats one style vector n times.
  static LatentCode broadcast(std::span<const double> w, int n_styles);
};

/// Learned latent direction s_e, same shape as the latent it edits.
struct ManipulationVector : StyleMatrix {
  using StyleMatrix::StyleMatrix;
};

/// w+ + k * s_e, element-wise. Throws DomainError on shape mismatch.
LatentCode apply_manipulation(const LatentCode& w, double k, const ManipulationVector& s);

}  // namespace facectl
