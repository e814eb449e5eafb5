// Copyright (c) 2026 The facectl Authors
// SPDX-License-Identifier: Apache-2.0

#include <doctest.h>

#include <cmath>
#include <functional>

#include "facectl/errors.hpp"
#include "facectl/nn.hpp"
#include "facectl/random.hpp"

using namespace facectl;
using nn::Matrix;

namespace {

// Checks dL/dx and every dL/dparam of L = sum(dy .* f(x)) against central differences.
void check_layer(Matrix x, const Matrix& dy, const std::function<Matrix(const Matrix&)>& forward,
                 const std::function<Matrix(const Matrix&, const Matrix&)>& backward, std::vector<nn::Parameter*> params) {
  for (auto* p : params) p->zero_grad();
  const Matrix dx = backward(x, dy);
  auto loss = [&](const Matrix& in) { return (forward(in).array() * dy.array()).sum(); };
  const double h = 1e-6;
  for (Eigen::Index i = 0; i < x.size(); ++i) {
    Matrix p = x, m = x;
    p.data()[i] += h;
    m.data()[i] -= h;
    const double fd = (loss(p) - loss(m)) / (2 * h);
    CHECK(std::abs(fd - dx.data()[i]) <= 1e-6 * std::max(1.0, std::abs(fd)));
  }
  for (auto* param : params) {
    for (Eigen::Index i = 0; i < param->value.size(); ++i) {
      const double keep = param->value.data()[i];
      param->value.data()[i] = keep + h;
      const double lp = loss(x);
      param->value.data()[i] = keep - h;
      const double lm = loss(x);
      param->value.data()[i] = keep;
      const double fd = (lp - lm) / (2 * h);
      CHECK(std::abs(fd - param->grad.data()[i]) <= 1e-6 * std::max(1.0, std::abs(fd)));
    }
  }
}

}  // namespace

TEST_SUITE("nn") {
  TEST_CASE("linear layer gradients") {
    Rng rng(1);
    nn::Linear lin("lin", 5, 3, rng, 0.5);
    lin.bias.value = nn::gaussian(rng, 1, 3, 0.1);
    const Matrix x = nn::gaussian(rng, 4, 5, 1.0), dy = nn::gaussian(rng, 4, 3, 1.0);
    check_layer(
        x, dy, [&](const Matrix& in) { return lin.forward(in); },
        [&](const Matrix& in, const Matrix& d) { return lin.backward(in, d); }, {&lin.weight, &lin.bias});
  }

  TEST_CASE("layer norm gradients and statistics") {
    Rng rng(2);
    nn::LayerNorm ln("ln", 6);
    ln.gain.value = nn::gaussian(rng, 1, 6, 0.3).array() + 1.0;
    ln.shift.value = nn::gaussian(rng, 1, 6, 0.3);
    const Matrix x = nn::gaussian(rng, 3, 6, 2.0), dy = nn::gaussian(rng, 3, 6, 1.0);
    check_layer(
        x, dy, [&](const Matrix& in) { return ln.forward(in, nullptr); },
        [&](const Matrix& in, const Matrix& d) {
          nn::LayerNorm::Cache c;
          ln.forward(in, &c);
          return ln.backward(c, d);
        },
        {&ln.gain, &ln.shift});

    nn::LayerNorm plain("plain", 6);
    const Matrix y = plain.forward(x, nullptr);
    for (Eigen::Index r = 0; r < y.rows(); ++r) {
      CHECK(std::abs(y.row(r).mean()) < 1e-12);
      CHECK(y.row(r).squaredNorm() / 6.0 == doctest::Approx(1.0).epsilon(1e-4));
    }
  }

  TEST_CASE("gelu values and gradient") {
    Matrix x(1, 3);
    x << -1.0, 0.0, 2.0;
    const Matrix y = nn::gelu(x);
    CHECK(y(0, 1) == 0.0);
    CHECK(y(0, 2) == doctest::Approx(2.0 * 0.5 * (1.0 + std::erf(2.0 / std::sqrt(2.0)))));
    Rng rng(3);
    const Matrix in = nn::gaussian(rng, 2, 4, 1.5), dy = nn::gaussian(rng, 2, 4, 1.0);
    check_layer(in, dy, [](const Matrix& v) { return nn::gelu(v); },
                [](const Matrix& v, const Matrix& d) { return nn::gelu_backward(v, d); }, {});
  }

  TEST_CASE("self-attention gradients over a batch of sequences") {
    Rng rng(4);
    nn::SelfAttention attn("attn", 8, 2, rng);
    const int seq = 3;
    const Matrix x = nn::gaussian(rng, 2 * seq, 8, 1.0), dy = nn::gaussian(rng, 2 * seq, 8, 1.0);
    std::vector<nn::Parameter*> params;
    attn.collect(params);
    check_layer(
        x, dy, [&](const Matrix& in) { return attn.forward(in, seq, nullptr); },
        [&](const Matrix& in, const Matrix& d) {
          nn::SelfAttention::Cache c;
          attn.forward(in, seq, &c);
          return attn.backward(c, seq, d);
        },
        params);
  }

  TEST_CASE("sequences in a batch do not attend to each other") {
    Rng rng(5);
    nn::SelfAttention attn("attn", 4, 2, rng);
    Matrix x = nn::gaussian(rng, 4, 4, 1.0);
    const Matrix y = attn.forward(x, 2, nullptr);
    x.row(3).setConstant(9.0);
    const Matrix y2 = attn.forward(x, 2, nullptr);
    CHECK(y.topRows(2) == y2.topRows(2));
  }

  TEST_CASE("encoder block gradients") {
    Rng rng(6);
    nn::EncoderBlock block("b", 8, 2, 16, rng);
    const int seq = 3;
    const Matrix x = nn::gaussian(rng, 2 * seq, 8, 1.0), dy = nn::gaussian(rng, 2 * seq, 8, 1.0);
    std::vector<nn::Parameter*> params;
    block.collect(params);
    for (auto* p : params) {
      if (p->name.find("shift") != std::string::npos || p->name.find("bias") != std::string::npos) {
        p->value = nn::gaussian(rng, static_cast<int>(p->value.rows()), static_cast<int>(p->value.cols()), 0.1);
      }
    }
    check_layer(
        x, dy, [&](const Matrix& in) { return block.forward(in, seq, nullptr); },
        [&](const Matrix& in, const Matrix& d) {
          nn::EncoderBlock::Cache c;
          block.forward(in, seq, &c);
          return block.backward(c, seq, d);
        },
        params);
  }

  TEST_CASE("adam follows the bias-corrected update") {
    nn::Parameter p("p", Matrix::Constant(1, 2, 1.0));
    nn::AdamOptions opts;
    opts.learning_rate = 0.1;
    nn::Adam adam({&p}, opts);
    p.grad << 2.0, -0.5;
    adam.step();
    // First step: m_hat = g, v_hat = g^2, so the update is lr * sign(g) up to epsilon.
    CHECK(p.value(0, 0) == doctest::Approx(0.9).epsilon(1e-7));
    CHECK(p.value(0, 1) == doctest::Approx(1.1).epsilon(1e-7));
    CHECK(adam.steps() == 1);
    const double after_first = p.value(0, 0);

    p.grad << 1.0, 1.0;
    adam.step();
    const double m = 0.9 * 0.1 * 2.0 + 0.1 * 1.0;
    const double v = 0.999 * 0.001 * 4.0 + 0.001 * 1.0;
    const double m_hat = m / (1 - 0.81), v_hat = v / (1 - 0.999 * 0.999);
    CHECK(p.value(0, 0) == doctest::Approx(after_first - 0.1 * m_hat / (std::sqrt(v_hat) + 1e-8)).epsilon(1e-12));
    adam.zero_grad();
    CHECK(p.grad.isZero());
  }

  TEST_CASE("adam state restores into an identical optimizer") {
    nn::Parameter a("a", Matrix::Constant(2, 2, 0.5)), b("b", Matrix::Constant(2, 2, 0.5));
    nn::Adam oa({&a}, {}), ob({&b}, {});
    for (int s = 0; s < 3; ++s) {
      a.grad.setConstant(0.3 * (s + 1));
      oa.step();
    }
    b.value = a.value;
    ob.restore(oa.steps(), oa.first_moments(), oa.second_moments());
    a.grad.setConstant(-0.2);
    b.grad.setConstant(-0.2);
    oa.step();
    ob.step();
    CHECK(a.value == b.value);
    CHECK_THROWS_AS(ob.restore(1, {Matrix::Zero(1, 1)}, {Matrix::Zero(1, 1)}), ConfigurationError);
  }
}
