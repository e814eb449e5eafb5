// Copyright (c) 2026 The facectl Authors
// SPDX-License-Identifier: Apache-2.0

#include "facectl/backend.hpp"

#include <nlohmann/json.hpp>

#include "facectl/errors.hpp"
#include "facectl/io.hpp"
#include "facectl/learned_detector.hpp"
#include "facectl/random.hpp"
#include "facectl/synthetic_world.hpp"

namespace facectl {

namespace {
constexpr std::uint64_t kLatentStream = 0x7a;
}

std::string to_string(LandmarkMode mode) { return mode == LandmarkMode::kOracleTap ? "oracle-tap" : "learned"; }

LandmarkMode parse_landmark_mode(const std::string& s) {
  if (s == "oracle-tap") return LandmarkMode::kOracleTap;
  if (s == "learned") return LandmarkMode::kLearned;
  throw ConfigurationError("unknown landmark mode '" + s + "' (expected oracle-tap or learned)");
}

std::string backend_descriptor_json(const BackendDescriptor& d) {
  nlohmann::ordered_json j;
  j["format"] = "facectl-backend";
  j["version"] = 1;
  j["kind"] = d.kind;
  j["seed"] = d.seed;
  j["n_styles"] = d.dims.n_styles;
  j["style_dim"] = d.dims.style_dim;
  j["height"] = d.dims.height;
  j["width"] = d.dims.width;
  j["stroke_sigma"] = d.stroke_sigma;
  j["landmark_mode"] = to_string(d.landmark_mode);
  if (!d.detector_path.empty()) j["detector"] = d.detector_path.string();
  return j.dump(2) + "\n";
}

BackendDescriptor parse_backend_descriptor(const std::string& json_text, const std::filesystem::path& base_dir) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(json_text);
  } catch (const nlohmann::json::exception& e) {
    throw ConfigurationError(std::string("backend descriptor is not valid JSON: ") + e.what());
  }
  try {
    BackendDescriptor d;
    d.kind = j.value("kind", std::string("synthetic"));
    d.seed = j.value("seed", std::uint64_t{1});
    d.dims.n_styles = j.value("n_styles", 4);
    d.dims.style_dim = j.value("style_dim", 64);
    d.dims.height = j.value("height", 64);
    d.dims.width = j.value("width", 64);
    d.stroke_sigma = j.value("stroke_sigma", 1.5);
    d.landmark_mode = parse_landmark_mode(j.value("landmark_mode", std::string("oracle-tap")));
    if (j.contains("detector")) {
      std::filesystem::path p = j["detector"].get<std::string>();
      d.detector_path = (p.is_relative() && !base_dir.empty()) ? base_dir / p : p;
    }
    return d;
  } catch (const nlohmann::json::exception& e) {
    throw ConfigurationError(std::string("bad backend descriptor field: ") + e.what());
  }
}

BackendDescriptor load_backend_descriptor(const std::filesystem::path& path) {
  return parse_backend_descriptor(read_file(path), path.parent_path());
}

void save_backend_descriptor(const BackendDescriptor& d, const std::filesystem::path& path) {
  write_file_atomic(path, backend_descriptor_json(d));
}

std::vector<double> GeneratorBackend::sample_latent(std::uint64_t seed) const {
  Rng rng(derive_seed(seed, {kLatentStream}));
  return standard_normal(rng, static_cast<std::size_t>(dims().style_dim));
}

std::uint64_t Backbone::checksum() const {
  Fnv1a h;
  const std::uint64_t g = generator->parameter_checksum();
  const std::uint64_t d = detector->parameter_checksum();
  h.update(&g, sizeof g);
  h.update(&d, sizeof d);
  return h.digest();
}

Backbone make_backbone(const BackendDescriptor& d) {
  if (d.kind != "synthetic") {
    throw ConfigurationError("backend kind '" + d.kind + "' is not built in; only 'synthetic' is available");
  }
  Backbone b;
  b.generator = std::make_shared<SyntheticFaceWorld>(d);
  if (d.landmark_mode == LandmarkMode::kOracleTap) {
    b.detector = std::make_shared<OracleTapDetector>();
  } else {
    if (d.detector_path.empty()) {
      b.detector = std::make_shared<LearnedDetector>();
    } else {
      b.detector = std::make_shared<LearnedDetector>(LearnedDetector::load(d.detector_path));
    }
  }
  return b;
}

}  // namespace facectl
