// Copyright (c) 2026 The facectl Authors
// SPDX-License-Identifier: Apache-2.0

#include "facectl/png.hpp"

#include <zlib.h>

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <vector>

#include "facectl/errors.hpp"

namespace facectl {

namespace {

constexpr std::array<unsigned char, 8> kSignature{0x89, 'P', 'N', 'G', '\r', '\n', 0x1a, '\n'};

void put_u32(std::string& out, std::uint32_t v) {
  out.push_back(static_cast<char>(v >> 24));
  out.push_back(static_cast<char>(v >> 16));
  out.push_back(static_cast<char>(v >> 8));
  out.push_back(static_cast<char>(v));
}

std::uint32_t get_u32(std::string_view s, std::size_t at) {
  if (at + 4 > s.size()) throw DomainError("truncated PNG");
  return (static_cast<std::uint32_t>(static_cast<unsigned char>(s[at])) << 24) |
         (static_cast<std::uint32_t>(static_cast<unsigned char>(s[at + 1])) << 16) |
         (static_cast<std::uint32_t>(static_cast<unsigned char>(s[at + 2])) << 8) |
         static_cast<std::uint32_t>(static_cast<unsigned char>(s[at + 3]));
}

void put_chunk(std::string& out, const char type[4], const std::string& data) {
  put_u32(out, static_cast<std::uint32_t>(data.size()));
  std::string body(type, 4);
  body += data;
  out += body;
  put_u32(out, static_cast<std::uint32_t>(
                   crc32(0L, reinterpret_cast<const Bytef*>(body.data()), static_cast<uInt>(body.size()))));
}

}  // namespace

std::string encode_png(const Image& image) {
  if (image.height <= 0 || image.width <= 0) throw DomainError("cannot encode an empty image");
  std::vector<unsigned char> raw;
  raw.reserve(static_cast<std::size_t>(image.height) * (image.width + 1));
  for (int r = 0; r < image.height; ++r) {
    raw.push_back(0);
    for (int c = 0; c < image.width; ++c) {
      const double v = std::clamp(image.at(r, c), 0.0, 1.0);
      raw.push_back(static_cast<unsigned char>(std::lround(v * 255.0)));
    }
  }
  uLongf packed_size = compressBound(static_cast<uLong>(raw.size()));
  std::string packed(packed_size, '\0');
  if (compress2(reinterpret_cast<Bytef*>(packed.data()), &packed_size, raw.data(), static_cast<uLong>(raw.size()),
                Z_BEST_COMPRESSION) != Z_OK) {
    throw DomainError("zlib compression failed");
  }
  packed.resize(packed_size);

  std::string out(kSignature.begin(), kSignature.end());
  std::string ihdr;
  put_u32(ihdr, static_cast<std::uint32_t>(image.width));
  put_u32(ihdr, static_cast<std::uint32_t>(image.height));
  ihdr += std::string{'\x08', '\x00', '\x00', '\x00', '\x00'};  // depth 8, grayscale, deflate, filter 0, no interlace
  put_chunk(out, "IHDR", ihdr);
  put_chunk(out, "IDAT", packed);
  put_chunk(out, "IEND", "");
  return out;
}

Image decode_png(std::string_view bytes) {
  if (bytes.size() < kSignature.size() ||
      !std::equal(kSignature.begin(), kSignature.end(), reinterpret_cast<const unsigned char*>(bytes.data()))) {
    throw DomainError("not a PNG file");
  }
  std::size_t at = kSignature.size();
  int width = 0, height = 0;
  std::string packed;
  bool done = false;
  while (!done) {
    const std::uint32_t len = get_u32(bytes, at);
    if (at + 12 + len > bytes.size()) throw DomainError("truncated PNG chunk");
    const std::string_view type = bytes.substr(at + 4, 4);
    const std::string_view data = bytes.substr(at + 8, len);
    const std::uint32_t crc = get_u32(bytes, at + 8 + len);
    if (crc != crc32(0L, reinterpret_cast<const Bytef*>(bytes.data() + at + 4), len + 4)) {
      throw DomainError("PNG chunk checksum mismatch");
    }
    if (type == "IHDR") {
      width = static_cast<int>(get_u32(data, 0));
      height = static_cast<int>(get_u32(data, 4));
      if (data.size() != 13 || data[8] != 8 || data[9] != 0 || data[12] != 0) {
        throw DomainError("only 8-bit grayscale non-interlaced PNGs are supported");
      }
    } else if (type == "IDAT") {
      packed.append(data);
    } else if (type == "IEND") {
      done = true;
    }
    at += 12 + len;
  }
  if (width <= 0 || height <= 0) throw DomainError("PNG has no header");
  std::vector<unsigned char> raw(static_cast<std::size_t>(height) * (width + 1));
  uLongf raw_size = static_cast<uLongf>(raw.size());
  if (uncompress(raw.data(), &raw_size, reinterpret_cast<const Bytef*>(packed.data()),
                 static_cast<uLong>(packed.size())) != Z_OK ||
      raw_size != raw.size()) {
    throw DomainError("PNG image data is corrupt");
  }
  Image img(height, width);
  for (int r = 0; r < height; ++r) {
    const std::size_t row = static_cast<std::size_t>(r) * (width + 1);
    if (raw[row] != 0) throw DomainError("unsupported PNG filter");
    for (int c = 0; c < width; ++c) img.at(r, c) = raw[row + 1 + static_cast<std::size_t>(c)] / 255.0;
  }
  return img;
}

}  // namespace facectl
