// Copyright (c) 2026 The facectl Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <string_view>

namespace facectl {

/// Shortest text form that parses back to the same double.
std::string format_double(double v);
double parse_double(std::string_view s);

std::string read_file(const std::filesystem::path& path);

/// Writes to a sibling temp file and renames it over `path`.
void write_file_atomic(const std::filesystem::path& path, std::string_view contents);

/// FNV-1a over raw bytes; used for parameter checksums and content handles.
class Fnv1a {
 public:
  void update(const void* data, std::size_t bytes);
  void update(std::span<const double> values) { update(values.data(), values.size_bytes()); }
  void update(std::string_view s) { update(s.data(), s.size()); }
  std::uint64_t digest() const { return state_; }

 private:
  std::uint64_t state_ = 0xcbf29ce484222325ULL;
};

std::string to_hex(std::uint64_t v);

}  // namespace facectl
