// Copyright (c) 2026 The facectl Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <span>

#include "facectl/feature_stats.hpp"
#include "facectl/landmarks.hpp"
#include "facectl/tensor_types.hpp"

namespace facectl {

struct LossWeights {
  double pix = 1.0;
  double feat = 3.0;
  double sff = 0.005;
  double reg = 0.1;
  double cor = 1.0;

  bool operator==(const LossWeights&) const = default;
};

/// Mean squared pixel difference. Throws DomainError on size mismatch.
double loss_pix(const Image& original, const Image& edited);
/// Mean squared difference of last-block features. Throws DomainError on size mismatch.
double loss_feat(std::span<const double> original, std::span<const double> edited);

/// max(0, 1 - cor * |c(i, j)|)
double relaxation(const CorrelationMatrix& corr, int i, int j, double cor);

/// (m_pred[j] - target)^2 + reg * sum_{i != j} (m_pred[i] - m_original[i])^2 * relaxation(i, j)
double loss_sff(const FeatureVector& m_pred, int j, double target, const FeatureVector& m_original,
                const CorrelationMatrix& corr, double reg, double cor);

/// d loss_sff / d m_pred.
FeatureVector loss_sff_gradient(const FeatureVector& m_pred, int j, double target, const FeatureVector& m_original,
                                const CorrelationMatrix& corr, double reg, double cor);

struct LossTerms {
  double pix = 0.0;
  double feat = 0.0;
  double sff = 0.0;
  double total = 0.0;
};

/// pix * L_pix + feat * L_feat + sff * L_SFF for one sample.
double weighted_total(const LossWeights& w, double l_pix, double l_feat, double l_sff);

/// Per-term and weighted totals averaged over samples.
LossTerms total_loss(std::span<const LossTerms> per_sample, const LossWeights& w);

}  // namespace facectl
