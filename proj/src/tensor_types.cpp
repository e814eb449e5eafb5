// Copyright (c) 2026 The facectl Authors
// SPDX-License-Identifier: Apache-2.0

#include "facectl/tensor_types.hpp"

#include <cmath>
#include <string>

#include "facectl/errors.hpp"

namespace facectl {

StyleMatrix::StyleMatrix(int n_styles, int style_dim)
    : n_(n_styles), d_(style_dim), values_(static_cast<std::size_t>(n_styles) * style_dim, 0.0) {
  if (n_styles <= 0 || style_dim <= 0) throw DomainError("style matrix dimensions must be positive");
}

StyleMatrix::StyleMatrix(int n_styles, int style_dim, std::vector<double> values)
    : n_(n_styles), d_(style_dim), values_(std::move(values)) {
  if (n_styles <= 0 || style_dim <= 0) throw DomainError("style matrix dimensions must be positive");
  if (values_.size() != static_cast<std::size_t>(n_styles) * style_dim) {
    throw DomainError("style matrix expects " + std::to_string(n_styles) + "x" + std::to_string(style_dim) +
                      " values, got " + std::to_string(values_.size()));
  }
  for (double v : values_) {
    if (!std::isfinite(v)) throw DomainError("style matrix holds a non-finite value");
  }
}

LatentCode LatentCode::broadcast(std::span<const double> w, int n_styles) {
  LatentCode out(n_styles, static_cast<int>(w.size()));
  for (int r = 0; r < n_styles; ++r) std::copy(w.begin(), w.end(), out.row(r).begin());
  return out;
}

LatentCode apply_manipulation(const LatentCode& w, double k, const ManipulationVector& s) {
  if (!w.same_shape(s)) throw DomainError("manipulation vector shape does not match latent");
  LatentCode out = w;
  auto dst = out.values();
  const auto src = s.values();
  for (std::size_t i = 0; i < dst.size(); ++i) dst[i] = dst[i] + k * src[i];
  return out;
}

}  // namespace facectl
