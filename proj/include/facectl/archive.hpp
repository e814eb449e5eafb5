// Copyright (c) 2026 The facectl Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <filesystem>
#include <map>
#include <nlohmann/json.hpp>
#include <string>
#include <vector>

namespace facectl {

struct Tensor {
  int rows = 0;
  int cols = 0;
  std::vector<double> data;  // row-major
};

/// Versioned binary container: magic, a JSON header with free-form metadata
/// and a tensor index, then raw little-endian doubles. Writes are atomic.
struct Archive {
  std::string kind;
  nlohmann::json meta = nlohmann::json::object();
  std::map<std::string, Tensor> tensors;

  const Tensor& tensor(const std::string& name) const;
};

void write_archive(const Archive& a, const std::filesystem::path& path);

/// Throws ConfigurationError on bad magic, unexpected kind, or truncation.
Archive read_archive(const std::filesystem::path& path, const std::string& expected_kind);

}  // namespace facectl
