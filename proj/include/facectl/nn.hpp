// Copyright (c) 2026 The facectl Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <Eigen/Dense>
#include <string>
#include <vector>

#include "facectl/random.hpp"

namespace facectl::nn {

using Matrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

struct Parameter {
  std::string name;
  Matrix value;
  Matrix grad;

  Parameter() = default;
  Parameter(std::string n, Matrix v) : name(std::move(n)), value(std::move(v)), grad(Matrix::Zero(value.rows(), value.cols())) {}
  void zero_grad() { grad.setZero(); }
};

Matrix gaussian(Rng& rng, int rows, int cols, double stddev);

/// y = x W^T + b, applied row-wise.
class Linear {
 public:
  Linear() = default;
  Linear(const std::string& name, int in, int out, Rng& rng, double init_std);

  Matrix forward(const Matrix& x) const;
  /// Accumulates parameter gradients and returns dL/dx.
  Matrix backward(const Matrix& x, const Matrix& dy);

  void collect(std::vector<Parameter*>& out) {
    out.push_back(&weight);
    out.push_back(&bias);
  }

  Parameter weight;  // out x in
  Parameter bias;    // 1 x out
};

class LayerNorm {
 public:
  struct Cache {
    Matrix normalized;
    Eigen::VectorXd inv_std;
  };

  LayerNorm() = default;
  LayerNorm(const std::string& name, int dim);

  Matrix forward(const Matrix& x, Cache* cache) const;
  Matrix backward(const Cache& cache, const Matrix& dy);

  void collect(std::vector<Parameter*>& out) {
    out.push_back(&gain);
    out.push_back(&shift);
  }

  static constexpr double kEpsilon = 1e-5;
  Parameter gain;
  Parameter shift;
};

Matrix gelu(const Matrix& x);
Matrix gelu_backward(const Matrix& x, const Matrix& dy);

/// Multi-head self-attention over a batch of equal-length sequences stacked
/// row-wise: rows [b*T, (b+1)*T) belong to sequence b. No masking.
class SelfAttention {
 public:
  struct Cache {
    Matrix input;
    Matrix qkv;
    std::vector<Matrix> probs;  // one T x T matrix per (sequence, head)
    Matrix context;
  };

  SelfAttention() = default;
  SelfAttention(const std::string& name, int dim, int heads, Rng& rng);

  Matrix forward(const Matrix& x, int seq_len, Cache* cache) const;
  Matrix backward(const Cache& cache, int seq_len, const Matrix& dy);

  void collect(std::vector<Parameter*>& out) {
    qkv_.collect(out);
    proj_.collect(out);
  }

 private:
  int dim_ = 0;
  int heads_ = 0;
  Linear qkv_;
  Linear proj_;
};

/// Pre-norm transformer encoder block:
///   h = x + Attn(LN1(x));  y = h + W2 gelu(W1 LN2(h))
class EncoderBlock {
 public:
  struct Cache {
    LayerNorm::Cache ln1, ln2;
    SelfAttention::Cache attn;
    Matrix normed2, hidden_pre, hidden;
  };

  EncoderBlock() = default;
  EncoderBlock(const std::string& name, int dim, int heads, int ffn_dim, Rng& rng);

  Matrix forward(const Matrix& x, int seq_len, Cache* cache) const;
  Matrix backward(const Cache& cache, int seq_len, const Matrix& dy);
  void collect(std::vector<Parameter*>& out);

 private:
  LayerNorm ln1_, ln2_;
  SelfAttention attn_;
  Linear ffn_in_, ffn_out_;
};

struct AdamOptions {
  double learning_rate = 2e-5;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
};

class Adam {
 public:
  Adam(std::vector<Parameter*> params, AdamOptions options);

  void step();
  void zero_grad();

  long long steps() const { return t_; }
  const AdamOptions& options() const { return options_; }
  const std::vector<Matrix>& first_moments() const { return m_; }
  const std::vector<Matrix>& second_moments() const { return v_; }
  /// Restores state saved from an identically shaped optimizer.
  void restore(long long steps, std::vector<Matrix> m, std::vector<Matrix> v);

 private:
  std::vector<Parameter*> params_;
  AdamOptions options_;
  std::vector<Matrix> m_, v_;
  long long t_ = 0;
};

}  // namespace facectl::nn
