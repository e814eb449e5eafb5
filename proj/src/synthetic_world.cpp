// Copyright (c) 2026 The facectl Authors
// SPDX-License-Identifier: Apache-2.0

#include "facectl/synthetic_world.hpp"

#include <cmath>
#include <numeric>
#include <string>

#include "facectl/errors.hpp"
#include "facectl/io.hpp"
#include "facectl/random.hpp"

namespace facectl {

namespace face {

const std::vector<Stroke>& strokes() {
  static const std::vector<Stroke> all = [] {
    auto range = [](int a, int b, bool close) {
      std::vector<int> v(static_cast<std::size_t>(b - a + 1));
      std::iota(v.begin(), v.end(), a);
      if (close) v.push_back(a);
      return v;
    };
    return std::vector<Stroke>{
        {kContour, range(0, 32, false)}, {kBrows, range(33, 41, true)},  {kBrows, range(42, 50, true)},
        {kNose, range(51, 54, false)},   {kNose, range(55, 59, false)},  {kEyes, range(60, 67, true)},
        {kEyes, range(68, 75, true)},    {kMouth, range(76, 87, true)},  {kMouth, range(88, 95, true)},
        {kPupils, {96}},                 {kPupils, {97}},
    };
  }();
  return all;
}

}  // namespace face

namespace {

constexpr std::uint64_t kMappingStream = 0x6d6170;
constexpr std::uint64_t kDecoderStream = 0x646563;
constexpr std::uint64_t kCalibrationStream = 0x63616c;
constexpr int kCalibrationSamples = 512;

// A stroke point is a blend of two landmarks: weight * L[a] + (1 - weight) * L[b].
struct StrokeRecipe {
  int a;
  int b;
  double weight;
  face::Channel channel;
};

const std::vector<StrokeRecipe>& stroke_recipes() {
  static const std::vector<StrokeRecipe> recipes = [] {
    std::vector<StrokeRecipe> out;
    for (const auto& s : face::strokes()) {
      const auto& path = s.path;
      const bool closed = path.size() > 2 && path.front() == path.back();
      const std::size_t unique = closed ? path.size() - 1 : path.size();
      for (std::size_t i = 0; i < unique; ++i) out.push_back({path[i], path[i], 1.0, s.channel});
      for (std::size_t i = 0; i + 1 < path.size(); ++i) out.push_back({path[i], path[i + 1], 0.5, s.channel});
    }
    return out;
  }();
  return recipes;
}

Eigen::MatrixXd gaussian_matrix(Rng& rng, int rows, int cols, double stddev) {
  std::normal_distribution<double> dist(0.0, stddev);
  Eigen::MatrixXd m(rows, cols);
  for (int r = 0; r < rows; ++r)
    for (int c = 0; c < cols; ++c) m(r, c) = dist(rng);
  return m;
}

Eigen::VectorXd gaussian_vector(Rng& rng, int n, double stddev) {
  std::normal_distribution<double> dist(0.0, stddev);
  Eigen::VectorXd v(n);
  for (int i = 0; i < n; ++i) v(i) = dist(rng);
  return v;
}

double sigmoid(double x) { return 1.0 / (1.0 + std::exp(-x)); }

Eigen::Map<const Eigen::VectorXd> as_vector(const LatentCode& w) {
  return {w.values().data(), static_cast<Eigen::Index>(w.size())};
}

}  // namespace

struct SyntheticFaceWorld::Decoded {
  Eigen::VectorXd hidden;
  std::array<double, face::kNumParams> squash{};  // sigmoid(raw)
  std::array<double, face::kNumParams> params{};
};

class SyntheticTrace final : public SynthesisTrace {
 public:
  Eigen::VectorXd hidden;
  std::array<double, face::kNumParams> squash{};
  Eigen::Matrix<double, kNumCoords, face::kNumParams> jacobian;  // d landmarks / d params
  std::vector<raster::StrokePoint> points;
  std::vector<double> image;
};

SyntheticFaceWorld::SyntheticFaceWorld(const BackendDescriptor& descriptor) : descriptor_(descriptor) {
  const auto& dims = descriptor_.dims;
  if (dims.n_styles <= 0 || dims.style_dim <= 0 || dims.height < 4 || dims.width < 4) {
    throw ConfigurationError("synthetic world needs positive latent dims and at least a 4x4 image");
  }
  if (!(descriptor_.stroke_sigma > 0.0)) throw ConfigurationError("stroke sigma must be positive");
  pool_factor_ = (dims.height % 4 == 0 && dims.width % 4 == 0) ? 4 : 1;

  const int d = dims.style_dim;
  {
    Rng rng(derive_seed(descriptor_.seed, {kMappingStream}));
    map_w1_ = gaussian_matrix(rng, d, d, std::sqrt(2.0 / d));
    map_b1_ = gaussian_vector(rng, d, 0.1);
    map_w2_ = gaussian_matrix(rng, d, d, std::sqrt(1.0 / d));
    map_b2_ = gaussian_vector(rng, d, 0.1);
  }
  {
    Rng rng(derive_seed(descriptor_.seed, {kDecoderStream}));
    const int in = dims.n_styles * d;
    dec_u_ = gaussian_matrix(rng, kDecoderHidden, in, std::sqrt(1.0 / in));
    dec_c_ = gaussian_vector(rng, kDecoderHidden, 0.1);
    dec_v_ = gaussian_matrix(rng, face::kNumParams, kDecoderHidden, std::sqrt(1.0 / kDecoderHidden));
    dec_b_ = Eigen::VectorXd::Zero(face::kNumParams);
  }

  // Standardize each raw parameter over the latent prior so the sigmoid
  // works in its responsive range.
  Eigen::MatrixXd raw(face::kNumParams, kCalibrationSamples);
  for (int s = 0; s < kCalibrationSamples; ++s) {
    const auto z = sample_latent(derive_seed(descriptor_.seed, {kCalibrationStream, static_cast<std::uint64_t>(s)}));
    const LatentCode w = map(z);
    const Eigen::VectorXd h = (dec_u_ * as_vector(w) + dec_c_).array().tanh();
    raw.col(s) = dec_v_ * h;
  }
  for (int p = 0; p < face::kNumParams; ++p) {
    const double mean = raw.row(p).mean();
    const double sd = std::sqrt((raw.row(p).array() - mean).square().sum() / (kCalibrationSamples - 1));
    dec_v_.row(p) /= sd;
    dec_b_(p) = -mean / sd;
  }
}

void SyntheticFaceWorld::check_shape(const LatentCode& w) const {
  if (w.n_styles() != descriptor_.dims.n_styles || w.style_dim() != descriptor_.dims.style_dim) {
    throw DomainError("latent shape " + std::to_string(w.n_styles()) + "x" + std::to_string(w.style_dim()) +
                      " does not match backend " + std::to_string(descriptor_.dims.n_styles) + "x" +
                      std::to_string(descriptor_.dims.style_dim));
  }
}

LatentCode SyntheticFaceWorld::map(std::span<const double> z) const {
  const int d = descriptor_.dims.style_dim;
  if (static_cast<int>(z.size()) != d) {
    throw DomainError("z has dimension " + std::to_string(z.size()) + ", backend expects " + std::to_string(d));
  }
  const Eigen::Map<const Eigen::VectorXd> zv(z.data(), d);
  Eigen::VectorXd h = map_w1_ * zv + map_b1_;
  h = h.unaryExpr([](double x) { return x > 0.0 ? x : 0.2 * x; });
  const Eigen::VectorXd w = map_w2_ * h + map_b2_;
  return LatentCode::broadcast(std::span<const double>(w.data(), static_cast<std::size_t>(d)), descriptor_.dims.n_styles);
}

SyntheticFaceWorld::Decoded SyntheticFaceWorld::run_decoder(const LatentCode& w) const {
  check_shape(w);
  Decoded out;
  out.hidden = (dec_u_ * as_vector(w) + dec_c_).array().tanh();
  const Eigen::VectorXd raw = dec_v_ * out.hidden + dec_b_;
  for (int p = 0; p < face::kNumParams; ++p) {
    const auto& range = face::kParamRanges[static_cast<std::size_t>(p)];
    out.squash[static_cast<std::size_t>(p)] = sigmoid(raw(p));
    out.params[static_cast<std::size_t>(p)] = range.lo + (range.hi - range.lo) * out.squash[static_cast<std::size_t>(p)];
  }
  return out;
}

std::array<double, face::kNumParams> SyntheticFaceWorld::decode(const LatentCode& w) const {
  return run_decoder(w).params;
}

raster::Grid SyntheticFaceWorld::feature_grid() const {
  return {face::kNumChannels, descriptor_.dims.height, descriptor_.dims.width};
}

std::size_t SyntheticFaceWorld::feature_size() const {
  const auto g = feature_grid();
  return static_cast<std::size_t>(g.channels) * (g.height / pool_factor_) * (g.width / pool_factor_);
}

SynthesisOutput SyntheticFaceWorld::render(const std::array<double, kNumCoords>& landmarks,
                                           std::vector<raster::StrokePoint>* points_out,
                                           std::vector<double>* maps_out) const {
  const auto& dims = descriptor_.dims;
  const double sigma = descriptor_.stroke_sigma;

  std::vector<raster::StrokePoint> points;
  const auto& recipes = stroke_recipes();
  points.reserve(recipes.size());
  for (const auto& r : recipes) {
    const double x = r.weight * landmarks[2 * r.a] + (1.0 - r.weight) * landmarks[2 * r.b];
    const double y = r.weight * landmarks[2 * r.a + 1] + (1.0 - r.weight) * landmarks[2 * r.b + 1];
    const bool pupil = r.channel == face::kPupils;
    points.push_back({x * dims.width - 0.5, y * dims.height - 0.5, r.channel,
                      pupil ? kPupilAmplitude : kStrokeAmplitude, pupil ? sigma * kPupilSigmaScale : sigma});
  }

  const auto grid = feature_grid();
  std::vector<double> maps(grid.size(), 0.0);
  raster::splat_parallel(points, grid, maps);

  SynthesisOutput out;
  out.landmarks = LandmarkSet(landmarks);
  out.image = Image(dims.height, dims.width);
  for (std::size_t px = 0; px < grid.plane(); ++px) {
    double s = 0.0;
    for (int ch = 0; ch < grid.channels; ++ch) s += maps[grid.plane() * static_cast<std::size_t>(ch) + px];
    out.image.pixels[px] = 1.0 - std::exp(-s);
  }
  out.last_block_features.assign(feature_size(), 0.0);
  raster::avg_pool(maps, grid, pool_factor_, out.last_block_features);

  if (points_out) *points_out = std::move(points);
  if (maps_out) *maps_out = std::move(maps);
  return out;
}

SynthesisOutput SyntheticFaceWorld::synthesize(const LatentCode& w) const {
  const Decoded dec = run_decoder(w);
  std::array<double, kNumCoords> landmarks{};
  face::layout_landmarks<double>(dec.params, landmarks);
  return render(landmarks, nullptr, nullptr);
}

TracedSynthesis SyntheticFaceWorld::synthesize_traced(const LatentCode& w) const {
  using D = face::Dual<face::kNumParams>;
  const Decoded dec = run_decoder(w);

  std::array<D, face::kNumParams> p;
  for (int i = 0; i < face::kNumParams; ++i) p[static_cast<std::size_t>(i)] = D::variable(dec.params[static_cast<std::size_t>(i)], i);
  std::array<D, kNumCoords> lm_dual;
  face::layout_landmarks<D>(p, lm_dual);

  auto trace = std::make_unique<SyntheticTrace>();
  std::array<double, kNumCoords> landmarks{};
  for (std::size_t i = 0; i < kNumCoords; ++i) {
    landmarks[i] = lm_dual[i].v;
    for (int k = 0; k < face::kNumParams; ++k) trace->jacobian(static_cast<Eigen::Index>(i), k) = lm_dual[i].d[static_cast<std::size_t>(k)];
  }
  trace->hidden = dec.hidden;
  trace->squash = dec.squash;

  TracedSynthesis out;
  out.output = render(landmarks, &trace->points, nullptr);
  trace->image = out.output.image.pixels;
  out.trace = std::move(trace);
  return out;
}

LatentCode SyntheticFaceWorld::backward(const SynthesisTrace& base, const SynthesisCotangent& cot) const {
  const auto& trace = dynamic_cast<const SyntheticTrace&>(base);
  const auto& dims = descriptor_.dims;
  const auto grid = feature_grid();

  // Channel-map cotangent: image = 1 - exp(-sum C) gives dI/dC_k = 1 - I.
  std::vector<double> d_maps(grid.size(), 0.0);
  if (!cot.image.empty()) {
    if (cot.image.size() != grid.plane()) throw DomainError("image cotangent has wrong size");
    for (std::size_t px = 0; px < grid.plane(); ++px) {
      const double g = cot.image[px] * (1.0 - trace.image[px]);
      for (int ch = 0; ch < grid.channels; ++ch) d_maps[grid.plane() * static_cast<std::size_t>(ch) + px] = g;
    }
  }
  if (!cot.last_block_features.empty()) {
    if (cot.last_block_features.size() != feature_size()) throw DomainError("feature cotangent has wrong size");
    raster::avg_pool_backward(cot.last_block_features, grid, pool_factor_, d_maps);
  }

  std::vector<double> d_xy(2 * trace.points.size(), 0.0);
  raster::splat_backward_parallel(trace.points, grid, d_maps, d_xy);

  Eigen::Matrix<double, kNumCoords, 1> d_lm;
  for (std::size_t i = 0; i < kNumCoords; ++i) d_lm(static_cast<Eigen::Index>(i)) = cot.landmarks[i];
  const auto& recipes = stroke_recipes();
  for (std::size_t i = 0; i < recipes.size(); ++i) {
    const auto& r = recipes[i];
    const double gx = d_xy[2 * i] * dims.width;
    const double gy = d_xy[2 * i + 1] * dims.height;
    d_lm(2 * r.a) += r.weight * gx;
    d_lm(2 * r.a + 1) += r.weight * gy;
    if (r.weight != 1.0) {
      d_lm(2 * r.b) += (1.0 - r.weight) * gx;
      d_lm(2 * r.b + 1) += (1.0 - r.weight) * gy;
    }
  }

  const Eigen::Matrix<double, face::kNumParams, 1> d_params = trace.jacobian.transpose() * d_lm;
  Eigen::VectorXd d_raw(face::kNumParams);
  for (int p = 0; p < face::kNumParams; ++p) {
    const auto& range = face::kParamRanges[static_cast<std::size_t>(p)];
    const double s = trace.squash[static_cast<std::size_t>(p)];
    d_raw(p) = d_params(p) * (range.hi - range.lo) * s * (1.0 - s);
  }
  const Eigen::VectorXd d_hidden = dec_v_.transpose() * d_raw;
  const Eigen::VectorXd d_pre = d_hidden.array() * (1.0 - trace.hidden.array().square());
  const Eigen::VectorXd d_w = dec_u_.transpose() * d_pre;

  LatentCode out(dims.n_styles, dims.style_dim);
  std::copy(d_w.data(), d_w.data() + d_w.size(), out.values().begin());
  return out;
}

std::uint64_t SyntheticFaceWorld::parameter_checksum() const {
  Fnv1a h;
  auto add = [&h](const auto& m) { h.update(m.data(), static_cast<std::size_t>(m.size()) * sizeof(double)); };
  add(map_w1_);
  add(map_b1_);
  add(map_w2_);
  add(map_b2_);
  add(dec_u_);
  add(dec_c_);
  add(dec_v_);
  add(dec_b_);
  h.update(&descriptor_.stroke_sigma, sizeof(double));
  return h.digest();
}

void OracleTapDetector::backward(const SynthesisOutput&, std::span<const double, kNumCoords> d_landmarks,
                                 SynthesisCotangent& cot) const {
  for (std::size_t i = 0; i < kNumCoords; ++i) cot.landmarks[i] += d_landmarks[i];
}

}  // namespace facectl
