// Copyright (c) 2026 The facectl Authors
// SPDX-License-Identifier: Apache-2.0

#include "facectl/losses.hpp"

#include <algorithm>
#include <cmath>

#include "facectl/errors.hpp"

namespace facectl {

double loss_pix(const Image& original, const Image& edited) {
  if (original.height != edited.height || original.width != edited.width || original.size() == 0) {
    throw DomainError("pixel loss needs two non-empty images of the same size");
  }
  double sum = 0.0;
  for (std::size_t i = 0; i < original.size(); ++i) {
    const double diff = edited.pixels[i] - original.pixels[i];
    sum += diff * diff;
  }
  return sum / static_cast<double>(original.size());
}

double loss_feat(std::span<const double> original, std::span<const double> edited) {
  if (original.size() != edited.size() || original.empty()) {
    throw DomainError("feature loss needs two non-empty feature maps of the same size");
  }
  double sum = 0.0;
  for (std::size_t i = 0; i < original.size(); ++i) {
    const double diff = edited[i] - original[i];
    sum += diff * diff;
  }
  return sum / static_cast<double>(original.size());
}

double relaxation(const CorrelationMatrix& corr, int i, int j, double cor) {
  return std::max(0.0, 1.0 - cor * std::abs(corr(static_cast<std::size_t>(i), static_cast<std::size_t>(j))));
}

double loss_sff(const FeatureVector& m_pred, int j, double target, const FeatureVector& m_original,
                const CorrelationMatrix& corr, double reg, double cor) {
  if (j < 0 || j >= static_cast<int>(kNumFeatures)) throw DomainError("feature id outside 0..22");
  const double on_target = m_pred[static_cast<std::size_t>(j)] - target;
  double regularizer = 0.0;
  for (int i = 0; i < static_cast<int>(kNumFeatures); ++i) {
    if (i == j) continue;
    const double diff = m_pred[static_cast<std::size_t>(i)] - m_original[static_cast<std::size_t>(i)];
    regularizer += diff * diff * relaxation(corr, i, j, cor);
  }
  return on_target * on_target + reg * regularizer;
}

FeatureVector loss_sff_gradient(const FeatureVector& m_pred, int j, double target, const FeatureVector& m_original,
                                const CorrelationMatrix& corr, double reg, double cor) {
  if (j < 0 || j >= static_cast<int>(kNumFeatures)) throw DomainError("feature id outside 0..22");
  FeatureVector g{};
  for (int i = 0; i < static_cast<int>(kNumFeatures); ++i) {
    const auto si = static_cast<std::size_t>(i);
    if (i == j) {
      g[si] = 2.0 * (m_pred[si] - target);
    } else {
      g[si] = 2.0 * reg * (m_pred[si] - m_original[si]) * relaxation(corr, i, j, cor);
    }
  }
  return g;
}

double weighted_total(const LossWeights& w, double l_pix, double l_feat, double l_sff) {
  return w.pix * l_pix + w.feat * l_feat + w.sff * l_sff;
}

LossTerms total_loss(std::span<const LossTerms> per_sample, const LossWeights& w) {
  LossTerms mean;
  if (per_sample.empty()) return mean;
  for (const auto& t : per_sample) {
    mean.pix += t.pix;
    mean.feat += t.feat;
    mean.sff += t.sff;
  }
  const double n = static_cast<double>(per_sample.size());
  mean.pix /= n;
  mean.feat /= n;
  mean.sff /= n;
  mean.total = weighted_total(w, mean.pix, mean.feat, mean.sff);
  return mean;
}

}  // namespace facectl
