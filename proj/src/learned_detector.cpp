// Copyright (c) 2026 The facectl Authors
// SPDX-License-Identifier: Apache-2.0

#include "facectl/learned_detector.hpp"

#include <cmath>

#include "facectl/archive.hpp"
#include "facectl/errors.hpp"
#include "facectl/io.hpp"
#include "facectl/random.hpp"

namespace facectl {

namespace {

constexpr std::array<int, 2> kPoolSizes{2, 4};
constexpr std::uint64_t kFitStream = 0x646574;

}  // namespace

std::size_t LearnedDetector::stem_size() const {
  std::size_t n = 0;
  for (int f : kPoolSizes) n += static_cast<std::size_t>(height_ / f) * (width_ / f);
  return n;
}

Eigen::VectorXd LearnedDetector::stem(const Image& image) const {
  if (image.height != height_ || image.width != width_) {
    throw DomainError("detector was fitted on " + std::to_string(height_) + "x" + std::to_string(width_) + " images");
  }
  Eigen::VectorXd out = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(stem_size() + 1));
  Eigen::Index base = 0;
  for (int f : kPoolSizes) {
    const int ow = width_ / f;
    const double scale = 1.0 / (f * f);
    for (int r = 0; r < (height_ / f) * f; ++r)
      for (int c = 0; c < ow * f; ++c) out(base + (r / f) * ow + c / f) += image.at(r, c) * scale;
    base += static_cast<Eigen::Index>((height_ / f) * ow);
  }
  out(base) = 1.0;
  return out;
}

LearnedDetector LearnedDetector::fit(const GeneratorBackend& backend, const DetectorTrainingOptions& options) {
  if (options.samples < 16) throw ConfigurationError("detector fitting needs at least 16 samples");
  LearnedDetector det;
  det.height_ = backend.dims().height;
  det.width_ = backend.dims().width;
  const auto features = static_cast<Eigen::Index>(det.stem_size() + 1);

  Eigen::MatrixXd x(options.samples, features);
  Eigen::MatrixXd y(options.samples, static_cast<Eigen::Index>(kNumCoords));
#pragma omp parallel for schedule(static)
  for (int i = 0; i < options.samples; ++i) {
    const auto z = backend.sample_latent(derive_seed(options.seed, {kFitStream, static_cast<std::uint64_t>(i)}));
    const auto out = backend.synthesize(backend.map(z));
    x.row(i) = det.stem(out.image).transpose();
    const auto coords = out.landmarks.coords();
    for (std::size_t k = 0; k < kNumCoords; ++k) y(i, static_cast<Eigen::Index>(k)) = coords[k];
  }

  Eigen::MatrixXd gram = x.transpose() * x;
  gram.diagonal().array() += options.ridge * static_cast<double>(options.samples);
  det.head_ = gram.ldlt().solve(x.transpose() * y);
  if (!det.head_.allFinite()) throw DegenerateStatisticsError("detector ridge solve produced non-finite weights");
  return det;
}

LandmarkSet LearnedDetector::detect(const SynthesisOutput& out) const {
  if (!ready()) throw NotReadyError("learned landmark detector has not been fitted");
  const Eigen::VectorXd pred = head_.transpose() * stem(out.image);
  return LandmarkSet(std::span<const double>(pred.data(), kNumCoords));
}

void LearnedDetector::backward(const SynthesisOutput& out, std::span<const double, kNumCoords> d_landmarks,
                               SynthesisCotangent& cot) const {
  if (!ready()) throw NotReadyError("learned landmark detector has not been fitted");
  const Eigen::Map<const Eigen::VectorXd> d_lm(d_landmarks.data(), static_cast<Eigen::Index>(kNumCoords));
  const Eigen::VectorXd d_stem = head_ * d_lm;
  if (cot.image.empty()) cot.image.assign(out.image.size(), 0.0);
  Eigen::Index base = 0;
  for (int f : kPoolSizes) {
    const int ow = width_ / f;
    const double scale = 1.0 / (f * f);
    for (int r = 0; r < (height_ / f) * f; ++r)
      for (int c = 0; c < ow * f; ++c) {
        cot.image[static_cast<std::size_t>(r) * width_ + c] += d_stem(base + (r / f) * ow + c / f) * scale;
      }
    base += static_cast<Eigen::Index>((height_ / f) * ow);
  }
}

std::uint64_t LearnedDetector::parameter_checksum() const {
  Fnv1a h;
  h.update(&height_, sizeof height_);
  h.update(&width_, sizeof width_);
  h.update(head_.data(), static_cast<std::size_t>(head_.size()) * sizeof(double));
  return h.digest();
}

double LearnedDetector::mean_error(const GeneratorBackend& backend, int samples, std::uint64_t seed) const {
  double total = 0.0;
  for (int i = 0; i < samples; ++i) {
    const auto z = backend.sample_latent(derive_seed(seed, {kFitStream + 1, static_cast<std::uint64_t>(i)}));
    const auto out = backend.synthesize(backend.map(z));
    const auto pred = detect(out);
    for (std::size_t k = 0; k < kNumLandmarks; ++k) {
      total += std::hypot(pred.x(k) - out.landmarks.x(k), pred.y(k) - out.landmarks.y(k));
    }
  }
  return total / (static_cast<double>(samples) * kNumLandmarks);
}

void LearnedDetector::save(const std::filesystem::path& path) const {
  if (!ready()) throw NotReadyError("cannot save an unfitted detector");
  Archive a;
  a.kind = "landmark-detector";
  a.meta["height"] = height_;
  a.meta["width"] = width_;
  a.meta["pool_sizes"] = kPoolSizes;
  Tensor t{static_cast<int>(head_.rows()), static_cast<int>(head_.cols()), {}};
  t.data.resize(static_cast<std::size_t>(head_.size()));
  for (int r = 0; r < t.rows; ++r)
    for (int c = 0; c < t.cols; ++c) t.data[static_cast<std::size_t>(r) * t.cols + c] = head_(r, c);
  a.tensors["head"] = std::move(t);
  write_archive(a, path);
}

LearnedDetector LearnedDetector::load(const std::filesystem::path& path) {
  const Archive a = read_archive(path, "landmark-detector");
  LearnedDetector det;
  det.height_ = a.meta.at("height").get<int>();
  det.width_ = a.meta.at("width").get<int>();
  const Tensor& t = a.tensor("head");
  if (static_cast<std::size_t>(t.rows) != det.stem_size() + 1 || t.cols != static_cast<int>(kNumCoords)) {
    throw ConfigurationError(path.string() + ": detector head shape does not match its image size");
  }
  det.head_.resize(t.rows, t.cols);
  for (int r = 0; r < t.rows; ++r)
    for (int c = 0; c < t.cols; ++c) det.head_(r, c) = t.data[static_cast<std::size_t>(r) * t.cols + c];
  return det;
}

}  // namespace facectl
