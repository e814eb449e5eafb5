// Copyright (c) 2026 The facectl Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <span>

namespace facectl::raster {

/// A Gaussian blob in pixel coordinates (pixel (r, c) has its center at (c, r)).
struct StrokePoint {
  double x = 0.0;
  double y = 0.0;
  int channel = 0;
  double amplitude = 1.0;
  double sigma = 1.5;
};

struct Grid {
  int channels = 1;
  int height = 0;
  int width = 0;

  std::size_t plane() const { return static_cast<std::size_t>(height) * width; }
  std::size_t size() const { return plane() * channels; }
};

/// Support radius of the footprint, in units of sigma.
inline constexpr double kSupportSigmas = 4.0;

/// Separable footprint g(u) = exp(-u^2 / 2s^2) * (1 - u^2/R^2)^2 for |u| < R,
/// zero outside. The taper keeps it C1 at the window edge.
double footprint(double u, double sigma);
double footprint_derivative(double u, double sigma);

// Both splat variants add every point's footprint into `maps` (channels x H x W).
// Per pixel, contributions are summed in point order, so the two variants
// agree bit-for-bit.
void splat_reference(std::span<const StrokePoint> points, Grid grid, std::span<double> maps);
void splat_parallel(std::span<const StrokePoint> points, Grid grid, std::span<double> maps);

// Gradient of sum(d_maps * maps) with respect to each point's (x, y),
// written to d_xy[2*i], d_xy[2*i + 1].
void splat_backward_reference(std::span<const StrokePoint> points, Grid grid, std::span<const double> d_maps,
                              std::span<double> d_xy);
void splat_backward_parallel(std::span<const StrokePoint> points, Grid grid, std::span<const double> d_maps,
                             std::span<double> d_xy);

/// Non-overlapping average pooling per channel; height and width must be
/// divisible by `factor`.
void avg_pool(std::span<const double> maps, Grid grid, int factor, std::span<double> out);
void avg_pool_backward(std::span<const double> d_out, Grid grid, int factor, std::span<double> d_maps);

}  // namespace facectl::raster
