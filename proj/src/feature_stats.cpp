// Copyright (c) 2026 The facectl Authors
// SPDX-License-Identifier: Apache-2.0

#include "facectl/feature_stats.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>
#include <vector>

#include "facectl/errors.hpp"
#include "facectl/io.hpp"

namespace facectl {

namespace {

constexpr const char* kStatsMagic = "facectl-stats";
constexpr const char* kCorrelationMagic = "facectl-correlation";
constexpr int kFormatVersion = 1;

// Linear interpolation between order statistics.
double percentile(std::vector<double> values, double q) {
  std::sort(values.begin(), values.end());
  const double pos = q * static_cast<double>(values.size() - 1);
  const auto lo = static_cast<std::size_t>(std::floor(pos));
  const auto hi = std::min(lo + 1, values.size() - 1);
  const double frac = pos - static_cast<double>(lo);
  return values[lo] + frac * (values[hi] - values[lo]);
}

std::vector<std::string> split_tabs(const std::string& line) {
  std::vector<std::string> out;
  std::stringstream ss(line);
  std::string cell;
  while (std::getline(ss, cell, '\t')) out.push_back(cell);
  return out;
}

void expect_header(std::istream& in, const char* magic, const std::filesystem::path& path) {
  std::string tag;
  int version = 0;
  in >> tag >> version;
  if (tag != magic || version != kFormatVersion) {
    throw ConfigurationError(path.string() + ": expected " + magic + " v" + std::to_string(kFormatVersion));
  }
  std::string rest;
  std::getline(in, rest);
}

}  // namespace

FeatureStats fit_stats(std::span<const FeatureVector> dataset, std::string corpus) {
  if (dataset.size() < 2) throw DegenerateStatisticsError("fit_stats needs at least 2 samples");
  const auto n = static_cast<double>(dataset.size());

  FeatureStats s;
  s.sample_count = dataset.size();
  s.corpus = std::move(corpus);
  for (std::size_t j = 0; j < kNumFeatures; ++j) {
    double sum = 0.0;
    for (const auto& v : dataset) sum += v[j];
    const double mean = sum / n;
    double ss = 0.0;
    for (const auto& v : dataset) ss += (v[j] - mean) * (v[j] - mean);
    const double sd = std::sqrt(ss / (n - 1.0));
    if (!(sd > 0.0) || !std::isfinite(sd)) {
      throw DegenerateStatisticsError("feature '" + feature_catalog()[j].name + "' has zero variance");
    }
    s.mean[j] = mean;
    s.std[j] = sd;
  }

  std::vector<double> column(dataset.size());
  for (std::size_t j = 0; j < kNumFeatures; ++j) {
    for (std::size_t k = 0; k < dataset.size(); ++k) column[k] = (dataset[k][j] - s.mean[j]) / s.std[j];
    s.slider_lo[j] = percentile(column, kSliderLowerPercentile);
    s.slider_hi[j] = percentile(column, kSliderUpperPercentile);
  }
  return s;
}

FeatureVector normalize(const FeatureVector& v, const FeatureStats& s) {
  FeatureVector out{};
  for (std::size_t j = 0; j < kNumFeatures; ++j) out[j] = (v[j] - s.mean[j]) / s.std[j];
  return out;
}

FeatureVector denormalize(const FeatureVector& v, const FeatureStats& s) {
  FeatureVector out{};
  for (std::size_t j = 0; j < kNumFeatures; ++j) out[j] = v[j] * s.std[j] + s.mean[j];
  return out;
}

CorrelationMatrix correlation_matrix(std::span<const FeatureVector> dataset) {
  if (dataset.size() < 3) throw DegenerateStatisticsError("correlation_matrix needs at least 3 samples");
  const auto n = static_cast<double>(dataset.size());

  FeatureVector mean{};
  for (const auto& v : dataset)
    for (std::size_t j = 0; j < kNumFeatures; ++j) mean[j] += v[j];
  for (auto& m : mean) m /= n;

  std::array<std::array<double, kNumFeatures>, kNumFeatures> cov{};
  for (const auto& v : dataset) {
    FeatureVector c{};
    for (std::size_t j = 0; j < kNumFeatures; ++j) c[j] = v[j] - mean[j];
    for (std::size_t i = 0; i < kNumFeatures; ++i)
      for (std::size_t j = i; j < kNumFeatures; ++j) cov[i][j] += c[i] * c[j];
  }
  for (std::size_t j = 0; j < kNumFeatures; ++j) {
    if (!(cov[j][j] > 0.0)) {
      throw DegenerateStatisticsError("feature '" + feature_catalog()[j].name + "' has zero variance");
    }
  }

  CorrelationMatrix out;
  for (std::size_t i = 0; i < kNumFeatures; ++i) {
    out.entries[i][i] = 1.0;
    for (std::size_t j = i + 1; j < kNumFeatures; ++j) {
      const double r = std::clamp(cov[i][j] / std::sqrt(cov[i][i] * cov[j][j]), -1.0, 1.0);
      out.entries[i][j] = r;
      out.entries[j][i] = r;
    }
  }
  return out;
}

void save_stats(const FeatureStats& s, const std::filesystem::path& path) {
  std::ostringstream os;
  os << kStatsMagic << ' ' << kFormatVersion << '\n';
  os << "sample_count\t" << s.sample_count << '\n';
  os << "corpus\t" << s.corpus << '\n';
  os << "# name\tmean\tstd\tslider_lo\tslider_hi\n";
  for (std::size_t j = 0; j < kNumFeatures; ++j) {
    os << feature_catalog()[j].name << '\t' << format_double(s.mean[j]) << '\t' << format_double(s.std[j]) << '\t'
       << format_double(s.slider_lo[j]) << '\t' << format_double(s.slider_hi[j]) << '\n';
  }
  write_file_atomic(path, os.str());
}

FeatureStats load_stats(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigurationError("cannot open stats file " + path.string());
  expect_header(in, kStatsMagic, path);

  FeatureStats s;
  std::size_t rows = 0;
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty() || line[0] == '#') continue;
    const auto cells = split_tabs(line);
    if (cells.size() == 2 && cells[0] == "sample_count") {
      s.sample_count = std::stoul(cells[1]);
    } else if (cells.size() == 2 && cells[0] == "corpus") {
      s.corpus = cells[1];
    } else if (cells.size() == 5) {
      const auto id = find_feature(cells[0]);
      if (!id) throw ConfigurationError(path.string() + ": unknown feature '" + cells[0] + "'");
      const auto j = static_cast<std::size_t>(*id);
      s.mean[j] = parse_double(cells[1]);
      s.std[j] = parse_double(cells[2]);
      s.slider_lo[j] = parse_double(cells[3]);
      s.slider_hi[j] = parse_double(cells[4]);
      if (!(s.std[j] > 0.0)) throw DegenerateStatisticsError(path.string() + ": non-positive std for '" + cells[0] + "'");
      ++rows;
    } else {
      throw ConfigurationError(path.string() + ": malformed line '" + line + "'");
    }
  }
  if (rows != kNumFeatures) throw ConfigurationError(path.string() + ": expected 23 feature rows");
  return s;
}

void save_correlation(const CorrelationMatrix& c, const std::filesystem::path& path) {
  std::ostringstream os;
  os << kCorrelationMagic << ' ' << kFormatVersion << '\n';
  os << "feature";
  for (const auto& def : feature_catalog()) os << '\t' << def.name;
  os << '\n';
  for (std::size_t i = 0; i < kNumFeatures; ++i) {
    os << feature_catalog()[i].name;
    for (std::size_t j = 0; j < kNumFeatures; ++j) os << '\t' << format_double(c.entries[i][j]);
    os << '\n';
  }
  write_file_atomic(path, os.str());
}

CorrelationMatrix load_correlation(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigurationError("cannot open correlation file " + path.string());
  expect_header(in, kCorrelationMagic, path);

  std::string line;
  std::getline(in, line);
  const auto header = split_tabs(line);
  if (header.size() != kNumFeatures + 1) throw ConfigurationError(path.string() + ": bad header row");
  std::array<std::size_t, kNumFeatures> column_id{};
  for (std::size_t j = 0; j < kNumFeatures; ++j) {
    const auto id = find_feature(header[j + 1]);
    if (!id) throw ConfigurationError(path.string() + ": unknown feature '" + header[j + 1] + "'");
    column_id[j] = static_cast<std::size_t>(*id);
  }

  CorrelationMatrix c;
  std::size_t rows = 0;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    const auto cells = split_tabs(line);
    if (cells.size() != kNumFeatures + 1) throw ConfigurationError(path.string() + ": malformed row");
    const auto id = find_feature(cells[0]);
    if (!id) throw ConfigurationError(path.string() + ": unknown feature '" + cells[0] + "'");
    for (std::size_t j = 0; j < kNumFeatures; ++j) {
      c.entries[static_cast<std::size_t>(*id)][column_id[j]] = parse_double(cells[j + 1]);
    }
    ++rows;
  }
  if (rows != kNumFeatures) throw ConfigurationError(path.string() + ": expected 23 rows");
  return c;
}

}  // namespace facectl
