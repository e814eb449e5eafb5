// Copyright (c) 2026 The facectl Authors
// SPDX-License-Identifier: Apache-2.0

// Serial reference vs OpenMP stroke rasterizer, plus end-to-end synthesis and
// editor forward passes at desk scale.

#include <benchmark/benchmark.h>

#include <random>
#include <vector>

#include "facectl/backend.hpp"
#include "facectl/editor_network.hpp"
#include "facectl/random.hpp"
#include "facectl/raster.hpp"

namespace {

using facectl::raster::Grid;
using facectl::raster::StrokePoint;

/// Roughly the stroke load of one 64x64 face.
std::vector<StrokePoint> stroke_points(int count, const Grid& grid) {
  facectl::Rng rng(7);
  std::uniform_real_distribution<double> x(0.0, grid.width - 1.0), y(0.0, grid.height - 1.0);
  std::uniform_int_distribution<int> channel(0, grid.channels - 1);
  std::vector<StrokePoint> pts;
  for (int i = 0; i < count; ++i) pts.push_back({x(rng), y(rng), channel(rng), 1.0, 1.5});
  return pts;
}

constexpr Grid kGrid{4, 64, 64};

template <auto Splat>
void BM_Splat(benchmark::State& state) {
  const auto pts = stroke_points(static_cast<int>(state.range(0)), kGrid);
  std::vector<double> maps(kGrid.size());
  for (auto _ : state) {
    std::fill(maps.begin(), maps.end(), 0.0);
    Splat(pts, kGrid, maps);
    benchmark::DoNotOptimize(maps.data());
  }
  state.SetItemsProcessed(state.iterations() * state.range(0));
}

template <auto Backward>
void BM_SplatBackward(benchmark::State& state) {
  const auto pts = stroke_points(static_cast<int>(state.range(0)), kGrid);
  std::vector<double> d_maps(kGrid.size(), 0.5), d_xy(2 * pts.size());
  for (auto _ : state) {
    Backward(pts, kGrid, d_maps, d_xy);
    benchmark::DoNotOptimize(d_xy.data());
  }
  state.SetItemsProcessed(state.iterations() * state.range(0));
}

BENCHMARK(BM_Splat<facectl::raster::splat_reference>)->Name("splat/reference")->Arg(500)->Arg(2000);
BENCHMARK(BM_Splat<facectl::raster::splat_parallel>)->Name("splat/parallel")->Arg(500)->Arg(2000);
BENCHMARK(BM_SplatBackward<facectl::raster::splat_backward_reference>)->Name("splat_backward/reference")->Arg(500)->Arg(2000);
BENCHMARK(BM_SplatBackward<facectl::raster::splat_backward_parallel>)->Name("splat_backward/parallel")->Arg(500)->Arg(2000);

void BM_Synthesize(benchmark::State& state) {
  const facectl::Backbone backbone = facectl::make_backbone(facectl::BackendDescriptor{});
  const auto w = backbone.generator->map(backbone.generator->sample_latent(1));
  for (auto _ : state) benchmark::DoNotOptimize(backbone.generator->synthesize(w));
}
BENCHMARK(BM_Synthesize)->Name("synthesize/64x64");

void BM_EditorManipulation(benchmark::State& state) {
  const facectl::Backbone backbone = facectl::make_backbone(facectl::BackendDescriptor{});
  const auto w = backbone.generator->map(backbone.generator->sample_latent(1));
  const facectl::EditorNetwork editor(facectl::EditorConfig{}, 3);
  const auto e = editor.embed(5);
  for (auto _ : state) benchmark::DoNotOptimize(editor.predict_manipulation(w, e));
}
BENCHMARK(BM_EditorManipulation)->Name("editor/predict_manipulation");

}  // namespace

BENCHMARK_MAIN();
