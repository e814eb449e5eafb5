// Copyright (c) 2026 The facectl Authors
// SPDX-License-Identifier: Apache-2.0

#include "facectl/archive.hpp"

#include <cstdint>
#include <cstring>

#include "facectl/errors.hpp"
#include "facectl/io.hpp"

namespace facectl {

namespace {

constexpr char kMagic[8] = {'F', 'C', 'T', 'L', 'B', 'L', 'O', 'B'};
constexpr std::uint32_t kVersion = 1;

template <typename T>
void put(std::string& out, const T& v) {
  out.append(reinterpret_cast<const char*>(&v), sizeof v);
}

template <typename T>
T take(const std::string& in, std::size_t& pos, const std::filesystem::path& path) {
  if (pos + sizeof(T) > in.size()) throw ConfigurationError(path.string() + ": truncated archive");
  T v;
  std::memcpy(&v, in.data() + pos, sizeof v);
  pos += sizeof v;
  return v;
}

}  // namespace

const Tensor& Archive::tensor(const std::string& name) const {
  auto it = tensors.find(name);
  if (it == tensors.end()) throw ConfigurationError("archive has no tensor '" + name + "'");
  return it->second;
}

void write_archive(const Archive& a, const std::filesystem::path& path) {
  nlohmann::json header;
  header["kind"] = a.kind;
  header["meta"] = a.meta;
  nlohmann::json index = nlohmann::json::array();
  std::size_t offset = 0;
  for (const auto& [name, t] : a.tensors) {
    if (t.data.size() != static_cast<std::size_t>(t.rows) * t.cols) {
      throw DomainError("tensor '" + name + "' size does not match its shape");
    }
    index.push_back({{"name", name}, {"rows", t.rows}, {"cols", t.cols}, {"offset", offset}});
    offset += t.data.size();
  }
  header["tensors"] = index;
  const std::string text = header.dump();

  std::string out(kMagic, sizeof kMagic);
  put(out, kVersion);
  put(out, static_cast<std::uint64_t>(text.size()));
  out += text;
  for (const auto& [name, t] : a.tensors) {
    out.append(reinterpret_cast<const char*>(t.data.data()), t.data.size() * sizeof(double));
  }
  write_file_atomic(path, out);
}

Archive read_archive(const std::filesystem::path& path, const std::string& expected_kind) {
  const std::string in = read_file(path);
  if (in.size() < sizeof kMagic || std::memcmp(in.data(), kMagic, sizeof kMagic) != 0) {
    throw ConfigurationError(path.string() + ": not a facectl archive");
  }
  std::size_t pos = sizeof kMagic;
  const auto version = take<std::uint32_t>(in, pos, path);
  if (version != kVersion) throw ConfigurationError(path.string() + ": unsupported archive version " + std::to_string(version));
  const auto header_len = take<std::uint64_t>(in, pos, path);
  if (pos + header_len > in.size()) throw ConfigurationError(path.string() + ": truncated header");

  nlohmann::json header;
  try {
    header = nlohmann::json::parse(in.substr(pos, header_len));
  } catch (const nlohmann::json::exception& e) {
    throw ConfigurationError(path.string() + ": corrupt header: " + e.what());
  }
  pos += header_len;

  Archive a;
  a.kind = header.at("kind").get<std::string>();
  if (a.kind != expected_kind) {
    throw ConfigurationError(path.string() + ": expected a " + expected_kind + " archive, found " + a.kind);
  }
  a.meta = header.at("meta");
  const std::size_t data_start = pos;
  for (const auto& entry : header.at("tensors")) {
    Tensor t;
    t.rows = entry.at("rows").get<int>();
    t.cols = entry.at("cols").get<int>();
    const auto offset = entry.at("offset").get<std::size_t>();
    const std::size_t count = static_cast<std::size_t>(t.rows) * t.cols;
    const std::size_t begin = data_start + offset * sizeof(double);
    if (begin + count * sizeof(double) > in.size()) throw ConfigurationError(path.string() + ": truncated tensor data");
    t.data.resize(count);
    std::memcpy(t.data.data(), in.data() + begin, count * sizeof(double));
    a.tensors.emplace(entry.at("name").get<std::string>(), std::move(t));
  }
  return a;
}

}  // namespace facectl
