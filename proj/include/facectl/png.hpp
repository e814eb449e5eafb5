// Copyright (c) 2026 The facectl Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <string>
#include <string_view>

#include "facectl/tensor_types.hpp"

namespace facectl {

/// 8-bit grayscale PNG; pixel values are clamped to [0, 1] and rounded.
std::string encode_png(const Image& image);
/// Decodes 8-bit grayscale PNGs written by encode_png (filter type 0 only).
/// Throws DomainError on anything else.
Image decode_png(std::string_view bytes);

}  // namespace facectl
