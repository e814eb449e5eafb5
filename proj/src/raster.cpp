// Copyright (c) 2026 The facectl Authors
// SPDX-License-Identifier: Apache-2.0

#include "facectl/raster.hpp"

#include <algorithm>
#include <cmath>
#include <vector>

namespace facectl::raster {

double footprint(double u, double sigma) {
  const double radius = kSupportSigmas * sigma;
  const double q = u * u / (radius * radius);
  if (q >= 1.0) return 0.0;
  const double taper = 1.0 - q;
  return std::exp(-0.5 * u * u / (sigma * sigma)) * taper * taper;
}

double footprint_derivative(double u, double sigma) {
  const double radius = kSupportSigmas * sigma;
  const double q = u * u / (radius * radius);
  if (q >= 1.0) return 0.0;
  const double taper = 1.0 - q;
  const double g = std::exp(-0.5 * u * u / (sigma * sigma));
  return g * taper * (-u / (sigma * sigma) * taper - 4.0 * u / (radius * radius));
}

namespace {

struct Window {
  int c0, c1, r0, r1;  // inclusive
};

Window window_of(const StrokePoint& p, const Grid& g) {
  const double radius = kSupportSigmas * p.sigma;
  Window w{};
  w.c0 = std::max(0, static_cast<int>(std::ceil(p.x - radius)));
  w.c1 = std::min(g.width - 1, static_cast<int>(std::floor(p.x + radius)));
  w.r0 = std::max(0, static_cast<int>(std::ceil(p.y - radius)));
  w.r1 = std::min(g.height - 1, static_cast<int>(std::floor(p.y + radius)));
  return w;
}

// Separable footprint of one point, evaluated once over its window.
struct Footprint {
  Window w;
  std::size_t offset_x;  // into Footprints::values
  std::size_t offset_y;
};

struct Footprints {
  std::vector<Footprint> items;
  std::vector<double> values;
};

Footprints evaluate_footprints(std::span<const StrokePoint> points, const Grid& g) {
  Footprints f;
  f.items.reserve(points.size());
  for (const auto& p : points) {
    Footprint fp{window_of(p, g), 0, 0};
    fp.offset_x = f.values.size();
    for (int c = fp.w.c0; c <= fp.w.c1; ++c) f.values.push_back(footprint(static_cast<double>(c) - p.x, p.sigma));
    fp.offset_y = f.values.size();
    for (int r = fp.w.r0; r <= fp.w.r1; ++r) {
      f.values.push_back(p.amplitude * footprint(static_cast<double>(r) - p.y, p.sigma));
    }
    f.items.push_back(fp);
  }
  return f;
}

inline void splat_row(const Footprints& f, const Footprint& fp, int r, double* row) {
  const double gy = f.values[fp.offset_y + static_cast<std::size_t>(r - fp.w.r0)];
  if (gy == 0.0) return;
  const double* gx = f.values.data() + fp.offset_x - fp.w.c0;
  for (int c = fp.w.c0; c <= fp.w.c1; ++c) row[c] += gy * gx[c];
}

inline void point_gradient(const StrokePoint& p, const Grid& g, const double* d_plane, double* out) {
  const Window w = window_of(p, g);
  if (w.c0 > w.c1 || w.r0 > w.r1) {
    out[0] = out[1] = 0.0;
    return;
  }
  const int nc = w.c1 - w.c0 + 1;
  std::vector<double> gx(static_cast<std::size_t>(nc)), dgx(static_cast<std::size_t>(nc));
  for (int c = w.c0; c <= w.c1; ++c) {
    const double u = static_cast<double>(c) - p.x;
    gx[static_cast<std::size_t>(c - w.c0)] = footprint(u, p.sigma);
    dgx[static_cast<std::size_t>(c - w.c0)] = footprint_derivative(u, p.sigma);
  }
  double sx = 0.0, sy = 0.0;
  for (int r = w.r0; r <= w.r1; ++r) {
    const double v = static_cast<double>(r) - p.y;
    const double gy = footprint(v, p.sigma);
    const double dgy = footprint_derivative(v, p.sigma);
    const double* d_row = d_plane + static_cast<std::size_t>(r) * g.width;
    double ax = 0.0, ay = 0.0;
    for (int c = w.c0; c <= w.c1; ++c) {
      const double d = d_row[c];
      ax += d * dgx[static_cast<std::size_t>(c - w.c0)];
      ay += d * gx[static_cast<std::size_t>(c - w.c0)];
    }
    sx += ax * gy;
    sy += ay * dgy;
  }
  // d/dx of g(c - x) is -g'(c - x).
  out[0] = -p.amplitude * sx;
  out[1] = -p.amplitude * sy;
}

}  // namespace

void splat_reference(std::span<const StrokePoint> points, Grid grid, std::span<double> maps) {
  const Footprints f = evaluate_footprints(points, grid);
  for (std::size_t i = 0; i < points.size(); ++i) {
    const Footprint& fp = f.items[i];
    double* plane = maps.data() + grid.plane() * static_cast<std::size_t>(points[i].channel);
    for (int r = fp.w.r0; r <= fp.w.r1; ++r) splat_row(f, fp, r, plane + static_cast<std::size_t>(r) * grid.width);
  }
}

void splat_parallel(std::span<const StrokePoint> points, Grid grid, std::span<double> maps) {
  // Row-partitioned gather: each thread owns whole rows, so no two threads
  // touch the same pixel and per-pixel point order matches the reference.
  const Footprints f = evaluate_footprints(points, grid);

#pragma omp parallel for schedule(static)
  for (int r = 0; r < grid.height; ++r) {
    for (std::size_t i = 0; i < points.size(); ++i) {
      const Footprint& fp = f.items[i];
      if (r < fp.w.r0 || r > fp.w.r1) continue;
      double* plane = maps.data() + grid.plane() * static_cast<std::size_t>(points[i].channel);
      splat_row(f, fp, r, plane + static_cast<std::size_t>(r) * grid.width);
    }
  }
}

void splat_backward_reference(std::span<const StrokePoint> points, Grid grid, std::span<const double> d_maps,
                              std::span<double> d_xy) {
  for (std::size_t i = 0; i < points.size(); ++i) {
    const double* d_plane = d_maps.data() + grid.plane() * static_cast<std::size_t>(points[i].channel);
    point_gradient(points[i], grid, d_plane, d_xy.data() + 2 * i);
  }
}

void splat_backward_parallel(std::span<const StrokePoint> points, Grid grid, std::span<const double> d_maps,
                             std::span<double> d_xy) {
  const auto n = static_cast<std::ptrdiff_t>(points.size());
#pragma omp parallel for schedule(static)
  for (std::ptrdiff_t i = 0; i < n; ++i) {
    const auto k = static_cast<std::size_t>(i);
    const double* d_plane = d_maps.data() + grid.plane() * static_cast<std::size_t>(points[k].channel);
    point_gradient(points[k], grid, d_plane, d_xy.data() + 2 * k);
  }
}

void avg_pool(std::span<const double> maps, Grid grid, int factor, std::span<double> out) {
  const int oh = grid.height / factor, ow = grid.width / factor;
  const double scale = 1.0 / (factor * factor);
  for (int ch = 0; ch < grid.channels; ++ch) {
    const double* plane = maps.data() + grid.plane() * static_cast<std::size_t>(ch);
    double* dst = out.data() + static_cast<std::size_t>(ch) * oh * ow;
    for (int orow = 0; orow < oh; ++orow) {
      for (int ocol = 0; ocol < ow; ++ocol) {
        double s = 0.0;
        for (int dr = 0; dr < factor; ++dr)
          for (int dc = 0; dc < factor; ++dc) s += plane[(orow * factor + dr) * grid.width + ocol * factor + dc];
        dst[orow * ow + ocol] = s * scale;
      }
    }
  }
}

void avg_pool_backward(std::span<const double> d_out, Grid grid, int factor, std::span<double> d_maps) {
  const int oh = grid.height / factor, ow = grid.width / factor;
  const double scale = 1.0 / (factor * factor);
  for (int ch = 0; ch < grid.channels; ++ch) {
    double* plane = d_maps.data() + grid.plane() * static_cast<std::size_t>(ch);
    const double* src = d_out.data() + static_cast<std::size_t>(ch) * oh * ow;
    for (int r = 0; r < grid.height; ++r)
      for (int c = 0; c < grid.width; ++c) plane[r * grid.width + c] += src[(r / factor) * ow + c / factor] * scale;
  }
}

}  // namespace facectl::raster
