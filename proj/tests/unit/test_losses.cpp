// Copyright (c) 2026 The facectl Authors
// SPDX-License-Identifier: Apache-2.0

#include <doctest.h>

#include <cmath>

#include "facectl/errors.hpp"
#include "facectl/losses.hpp"
#include "facectl/random.hpp"
#include "support/loss_oracle.hpp"

using namespace facectl;
using namespace facectl::testing;

namespace {

Image as_image(const std::vector<double>& px, int h, int w) {
  Image im(h, w);
  im.pixels = px;
  return im;
}

}  // namespace

TEST_SUITE("losses") {
  TEST_CASE("default weights") {
    const LossWeights w;
    CHECK(w.pix == 1.0);
    CHECK(w.feat == 3.0);
    CHECK(w.sff == 0.005);
    CHECK(w.reg == 0.1);
    CHECK(w.cor == 1.0);
  }

  TEST_CASE("terms and totals match the direct formulas") {
    Rng rng(1);
    const CorrelationMatrix c = fabricate_correlation(rng);
    for (const LossWeights& w : {LossWeights{}, LossWeights{0.5, 2.0, 0.3, 0.7, 0.4}}) {
      const auto batch = fabricate_batch(rng, 8, 36, 20);
      std::vector<LossTerms> terms;
      for (const auto& s : batch) {
        LossTerms t;
        t.pix = loss_pix(as_image(s.image, 6, 6), as_image(s.image_edit, 6, 6));
        t.feat = loss_feat(s.feat, s.feat_edit);
        t.sff = loss_sff(s.m_pred, s.j, s.target, s.m_orig, c, w.reg, w.cor);
        CHECK(std::abs(t.pix - oracle_mse(s.image, s.image_edit)) < 1e-10);
        CHECK(std::abs(t.feat - oracle_mse(s.feat, s.feat_edit)) < 1e-10);
        CHECK(std::abs(t.sff - oracle_sff(s, c, w.reg, w.cor)) < 1e-10);
        terms.push_back(t);
      }
      CHECK(std::abs(total_loss(terms, w).total - oracle_total(batch, c, w)) < 1e-10);
    }
  }

  TEST_CASE("identical outputs cost nothing") {
    Rng rng(2);
    const auto s = fabricate_batch(rng, 1, 16, 10)[0];
    CHECK(loss_pix(as_image(s.image, 4, 4), as_image(s.image, 4, 4)) == 0.0);
    CHECK(loss_feat(s.feat, s.feat) == 0.0);
  }

  TEST_CASE("full relaxation zeroes the regularizer") {
    Rng rng(3);
    CorrelationMatrix c;
    for (auto& row : c.entries) row.fill(1.0);
    for (int a = 0; a < 23; a += 2) {
      for (int b = 1; b < 23; b += 2) c.entries[a][b] = c.entries[b][a] = -1.0;
    }
    const auto s = fabricate_batch(rng, 1, 4, 4)[0];
    const double on_target = (s.m_pred[s.j] - s.target) * (s.m_pred[s.j] - s.target);
    CHECK(loss_sff(s.m_pred, s.j, s.target, s.m_orig, c, 0.1, 1.0) == on_target);
    CHECK(relaxation(c, 0, 1, 1.0) == 0.0);
    CHECK(relaxation(c, 0, 1, 0.0) == 1.0);
  }

  TEST_CASE("relaxation is clamped at zero") {
    CorrelationMatrix c;
    c.entries[0][1] = c.entries[1][0] = 0.8;
    CHECK(relaxation(c, 0, 1, 2.0) == 0.0);
    CHECK(relaxation(c, 0, 1, 0.5) == doctest::Approx(0.6));
  }

  TEST_CASE("semantic loss gradient matches central differences") {
    Rng rng(4);
    const CorrelationMatrix c = fabricate_correlation(rng);
    const auto s = fabricate_batch(rng, 1, 4, 4)[0];
    const FeatureVector g = loss_sff_gradient(s.m_pred, s.j, s.target, s.m_orig, c, 0.3, 0.6);
    for (int i = 0; i < 23; ++i) {
      FeatureVector p = s.m_pred, m = s.m_pred;
      p[i] += 1e-6;
      m[i] -= 1e-6;
      const double fd = (loss_sff(p, s.j, s.target, s.m_orig, c, 0.3, 0.6) -
                         loss_sff(m, s.j, s.target, s.m_orig, c, 0.3, 0.6)) / 2e-6;
      CHECK(g[i] == doctest::Approx(fd).epsilon(1e-7).scale(1e-7));
    }
  }

  TEST_CASE("shape and id errors") {
    CHECK_THROWS_AS(loss_pix(Image(2, 2), Image(2, 3)), DomainError);
    CHECK_THROWS_AS(loss_feat(std::vector<double>{1.0}, std::vector<double>{1.0, 2.0}), DomainError);
    CHECK_THROWS_AS(loss_sff(FeatureVector{}, 23, 0.0, FeatureVector{}, CorrelationMatrix{}, 0.1, 1.0), DomainError);
    CHECK(total_loss(std::vector<LossTerms>{}, LossWeights{}).total == 0.0);
  }
}
