// Copyright (c) 2026 The facectl Authors
// SPDX-License-Identifier: Apache-2.0

#include "facectl/nn.hpp"

#include <cmath>

#include "facectl/errors.hpp"

namespace facectl::nn {

Matrix gaussian(Rng& rng, int rows, int cols, double stddev) {
  std::normal_distribution<double> dist(0.0, stddev);
  Matrix m(rows, cols);
  for (Eigen::Index i = 0; i < m.size(); ++i) m.data()[i] = dist(rng);
  return m;
}

// ---------------------------------------------------------------- Linear

Linear::Linear(const std::string& name, int in, int out, Rng& rng, double init_std)
    : weight(name + ".weight", gaussian(rng, out, in, init_std)), bias(name + ".bias", Matrix::Zero(1, out)) {}

Matrix Linear::forward(const Matrix& x) const {
  Matrix y = x * weight.value.transpose();
  y.rowwise() += bias.value.row(0);
  return y;
}

Matrix Linear::backward(const Matrix& x, const Matrix& dy) {
  weight.grad.noalias() += dy.transpose() * x;
  bias.grad.row(0) += dy.colwise().sum();
  return dy * weight.value;
}

// ------------------------------------------------------------- LayerNorm

LayerNorm::LayerNorm(const std::string& name, int dim)
    : gain(name + ".gain", Matrix::Ones(1, dim)), shift(name + ".shift", Matrix::Zero(1, dim)) {}

Matrix LayerNorm::forward(const Matrix& x, Cache* cache) const {
  const auto n = x.cols();
  Matrix normalized(x.rows(), n);
  Eigen::VectorXd inv_std(x.rows());
  for (Eigen::Index r = 0; r < x.rows(); ++r) {
    const double mean = x.row(r).mean();
    const double var = (x.row(r).array() - mean).square().sum() / static_cast<double>(n);
    inv_std(r) = 1.0 / std::sqrt(var + kEpsilon);
    normalized.row(r) = (x.row(r).array() - mean) * inv_std(r);
  }
  Matrix y = normalized.array().rowwise() * gain.value.row(0).array();
  y.rowwise() += shift.value.row(0);
  if (cache) {
    cache->normalized = std::move(normalized);
    cache->inv_std = std::move(inv_std);
  }
  return y;
}

Matrix LayerNorm::backward(const Cache& cache, const Matrix& dy) {
  const auto n = static_cast<double>(dy.cols());
  gain.grad.row(0) += (dy.array() * cache.normalized.array()).colwise().sum().matrix();
  shift.grad.row(0) += dy.colwise().sum();
  const Matrix d_norm = dy.array().rowwise() * gain.value.row(0).array();
  Matrix dx(dy.rows(), dy.cols());
  for (Eigen::Index r = 0; r < dy.rows(); ++r) {
    const double mean_d = d_norm.row(r).sum() / n;
    const double mean_dn = d_norm.row(r).dot(cache.normalized.row(r)) / n;
    dx.row(r) = cache.inv_std(r) * (d_norm.row(r).array() - mean_d - cache.normalized.row(r).array() * mean_dn);
  }
  return dx;
}

// ------------------------------------------------------------------ GELU

namespace {
constexpr double kInvSqrt2 = 0.70710678118654752440;
constexpr double kInvSqrt2Pi = 0.39894228040143267794;
}  // namespace

Matrix gelu(const Matrix& x) {
  return x.unaryExpr([](double v) { return 0.5 * v * (1.0 + std::erf(v * kInvSqrt2)); });
}

Matrix gelu_backward(const Matrix& x, const Matrix& dy) {
  Matrix dx(x.rows(), x.cols());
  for (Eigen::Index i = 0; i < x.size(); ++i) {
    const double v = x.data()[i];
    const double cdf = 0.5 * (1.0 + std::erf(v * kInvSqrt2));
    const double pdf = kInvSqrt2Pi * std::exp(-0.5 * v * v);
    dx.data()[i] = dy.data()[i] * (cdf + v * pdf);
  }
  return dx;
}

// --------------------------------------------------------- SelfAttention

SelfAttention::SelfAttention(const std::string& name, int dim, int heads, Rng& rng)
    : dim_(dim),
      heads_(heads),
      qkv_(name + ".qkv", dim, 3 * dim, rng, std::sqrt(1.0 / dim)),
      proj_(name + ".proj", dim, dim, rng, std::sqrt(1.0 / dim)) {
  if (heads <= 0 || dim % heads != 0) throw DomainError("model dim must be divisible by the head count");
}

Matrix SelfAttention::forward(const Matrix& x, int seq_len, Cache* cache) const {
  const int head_dim = dim_ / heads_;
  const double scale = 1.0 / std::sqrt(static_cast<double>(head_dim));
  const auto batch = static_cast<int>(x.rows() / seq_len);

  Matrix qkv = qkv_.forward(x);
  Matrix context(x.rows(), dim_);
  std::vector<Matrix> probs;
  if (cache) probs.reserve(static_cast<std::size_t>(batch * heads_));

  for (int b = 0; b < batch; ++b) {
    for (int h = 0; h < heads_; ++h) {
      const auto q = qkv.block(b * seq_len, h * head_dim, seq_len, head_dim);
      const auto k = qkv.block(b * seq_len, dim_ + h * head_dim, seq_len, head_dim);
      const auto v = qkv.block(b * seq_len, 2 * dim_ + h * head_dim, seq_len, head_dim);
      Matrix s = (q * k.transpose()) * scale;
      for (Eigen::Index r = 0; r < s.rows(); ++r) {
        const double mx = s.row(r).maxCoeff();
        s.row(r) = (s.row(r).array() - mx).exp();
        s.row(r) /= s.row(r).sum();
      }
      context.block(b * seq_len, h * head_dim, seq_len, head_dim) = s * v;
      if (cache) probs.push_back(std::move(s));
    }
  }
  Matrix y = proj_.forward(context);
  if (cache) {
    cache->input = x;
    cache->qkv = std::move(qkv);
    cache->probs = std::move(probs);
    cache->context = std::move(context);
  }
  return y;
}

Matrix SelfAttention::backward(const Cache& cache, int seq_len, const Matrix& dy) {
  const int head_dim = dim_ / heads_;
  const double scale = 1.0 / std::sqrt(static_cast<double>(head_dim));
  const auto batch = static_cast<int>(dy.rows() / seq_len);

  const Matrix d_context = proj_.backward(cache.context, dy);
  Matrix d_qkv = Matrix::Zero(cache.qkv.rows(), cache.qkv.cols());
  for (int b = 0; b < batch; ++b) {
    for (int h = 0; h < heads_; ++h) {
      const Matrix& p = cache.probs[static_cast<std::size_t>(b * heads_ + h)];
      const auto q = cache.qkv.block(b * seq_len, h * head_dim, seq_len, head_dim);
      const auto k = cache.qkv.block(b * seq_len, dim_ + h * head_dim, seq_len, head_dim);
      const auto v = cache.qkv.block(b * seq_len, 2 * dim_ + h * head_dim, seq_len, head_dim);
      const auto d_out = d_context.block(b * seq_len, h * head_dim, seq_len, head_dim);

      const Matrix d_p = d_out * v.transpose();
      d_qkv.block(b * seq_len, 2 * dim_ + h * head_dim, seq_len, head_dim) = p.transpose() * d_out;
      Matrix d_s(seq_len, seq_len);
      for (int r = 0; r < seq_len; ++r) {
        const double dot = d_p.row(r).dot(p.row(r));
        d_s.row(r) = p.row(r).array() * (d_p.row(r).array() - dot);
      }
      d_s *= scale;
      d_qkv.block(b * seq_len, h * head_dim, seq_len, head_dim) = d_s * k;
      d_qkv.block(b * seq_len, dim_ + h * head_dim, seq_len, head_dim) = d_s.transpose() * q;
    }
  }
  return qkv_.backward(cache.input, d_qkv);
}

// ---------------------------------------------------------- EncoderBlock

EncoderBlock::EncoderBlock(const std::string& name, int dim, int heads, int ffn_dim, Rng& rng)
    : ln1_(name + ".ln1", dim),
      ln2_(name + ".ln2", dim),
      attn_(name + ".attn", dim, heads, rng),
      ffn_in_(name + ".ffn_in", dim, ffn_dim, rng, std::sqrt(2.0 / dim)),
      ffn_out_(name + ".ffn_out", ffn_dim, dim, rng, std::sqrt(1.0 / ffn_dim)) {}

Matrix EncoderBlock::forward(const Matrix& x, int seq_len, Cache* cache) const {
  LayerNorm::Cache ln1_cache, ln2_cache;
  const Matrix normed1 = ln1_.forward(x, cache ? &ln1_cache : nullptr);
  const Matrix h = x + attn_.forward(normed1, seq_len, cache ? &cache->attn : nullptr);
  Matrix normed2 = ln2_.forward(h, cache ? &ln2_cache : nullptr);
  Matrix hidden_pre = ffn_in_.forward(normed2);
  Matrix hidden = gelu(hidden_pre);
  Matrix y = h + ffn_out_.forward(hidden);
  if (cache) {
    cache->ln1 = std::move(ln1_cache);
    cache->ln2 = std::move(ln2_cache);
    cache->normed2 = std::move(normed2);
    cache->hidden_pre = std::move(hidden_pre);
    cache->hidden = std::move(hidden);
  }
  return y;
}

Matrix EncoderBlock::backward(const Cache& cache, int seq_len, const Matrix& dy) {
  const Matrix d_hidden = ffn_out_.backward(cache.hidden, dy);
  const Matrix d_pre = gelu_backward(cache.hidden_pre, d_hidden);
  const Matrix d_normed2 = ffn_in_.backward(cache.normed2, d_pre);
  const Matrix dh = dy + ln2_.backward(cache.ln2, d_normed2);
  const Matrix d_normed1 = attn_.backward(cache.attn, seq_len, dh);
  return dh + ln1_.backward(cache.ln1, d_normed1);
}

void EncoderBlock::collect(std::vector<Parameter*>& out) {
  ln1_.collect(out);
  attn_.collect(out);
  ln2_.collect(out);
  ffn_in_.collect(out);
  ffn_out_.collect(out);
}

// ------------------------------------------------------------------ Adam

Adam::Adam(std::vector<Parameter*> params, AdamOptions options) : params_(std::move(params)), options_(options) {
  for (auto* p : params_) {
    m_.push_back(Matrix::Zero(p->value.rows(), p->value.cols()));
    v_.push_back(Matrix::Zero(p->value.rows(), p->value.cols()));
  }
}

void Adam::step() {
  ++t_;
  const double c1 = 1.0 - std::pow(options_.beta1, static_cast<double>(t_));
  const double c2 = 1.0 - std::pow(options_.beta2, static_cast<double>(t_));
  for (std::size_t i = 0; i < params_.size(); ++i) {
    auto& p = *params_[i];
    m_[i] = options_.beta1 * m_[i] + (1.0 - options_.beta1) * p.grad;
    v_[i] = options_.beta2 * v_[i] + (1.0 - options_.beta2) * p.grad.cwiseProduct(p.grad);
    p.value.array() -= options_.learning_rate * (m_[i].array() / c1) / ((v_[i].array() / c2).sqrt() + options_.epsilon);
  }
}

void Adam::zero_grad() {
  for (auto* p : params_) p->zero_grad();
}

void Adam::restore(long long steps, std::vector<Matrix> m, std::vector<Matrix> v) {
  if (m.size() != params_.size() || v.size() != params_.size()) throw ConfigurationError("optimizer state size mismatch");
  for (std::size_t i = 0; i < params_.size(); ++i) {
    if (m[i].rows() != params_[i]->value.rows() || m[i].cols() != params_[i]->value.cols() ||
        v[i].rows() != m[i].rows() || v[i].cols() != m[i].cols()) {
      throw ConfigurationError("optimizer state shape mismatch for " + params_[i]->name);
    }
  }
  t_ = steps;
  m_ = std::move(m);
  v_ = std::move(v);
}

}  // namespace facectl::nn
