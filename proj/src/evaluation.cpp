// Copyright (c) 2026 The facectl Authors
// SPDX-License-Identifier: Apache-2.0

#include "facectl/evaluation.hpp"

#include <cmath>
#include <cstdio>
#include <exception>
#include <nlohmann/json.hpp>
#include <random>
#include <sstream>

#include "facectl/errors.hpp"
#include "facectl/io.hpp"
#include "facectl/random.hpp"

namespace facectl {

namespace {

constexpr std::uint64_t kFaceStream = 0x6576;
constexpr std::uint64_t kEditStream = 0x6564;

std::string fixed(double v, int digits) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.*f", digits, v);
  return buf;
}

std::string pad(const std::string& s, std::size_t width) {
  return s.size() >= width ? s : s + std::string(width - s.size(), ' ');
}

nlohmann::ordered_json summary_json(const EvalReport& r, bool with_edits) {
  nlohmann::ordered_json j;
  j["tag"] = r.tag;
  j["faces"] = r.faces;
  j["edits_per_face"] = r.edits_per_face;
  j["rounds"] = r.rounds;
  j["pixel_error"] = r.pixel_error;
  j["edit_error"] = r.edit_error;
  j["entanglement"] = r.entanglement;
  j["target_distance"] = r.target_distance;
  if (with_edits) {
    j["edits"] = nlohmann::json::array();
    for (const auto& e : r.edits) {
      j["edits"].push_back({{"face", e.face},
                            {"feature", e.feature},
                            {"target", e.target},
                            {"original", e.original},
                            {"measured", e.measured},
                            {"pixel_error", e.pixel_error},
                            {"edit_error", e.edit_error},
                            {"entanglement", e.entanglement}});
    }
  }
  return j;
}

}  // namespace

double pixel_error(const Image& original, const Image& edited) {
  if (original.height != edited.height || original.width != edited.width || original.size() == 0) {
    throw DomainError("pixel error needs two non-empty images of the same size");
  }
  double sum = 0.0;
  for (std::size_t i = 0; i < original.size(); ++i) sum += std::abs(edited.pixels[i] - original.pixels[i]);
  return sum / static_cast<double>(original.size());
}

double edit_error(double measured, double target) { return std::abs(measured - target); }

double entanglement(const FeatureVector& measured, const FeatureVector& original, int j) {
  if (j < 0 || j >= static_cast<int>(kNumFeatures)) throw DomainError("feature id outside 0..22");
  double sum = 0.0;
  for (std::size_t i = 0; i < kNumFeatures; ++i) {
    if (static_cast<int>(i) != j) sum += std::abs(measured[i] - original[i]);
  }
  return sum / static_cast<double>(kNumFeatures - 1);
}

EvalReport evaluate(const EditorNetwork& editor, const Backbone& backbone, const FeatureStats& stats,
                    const EvalProtocol& protocol, const std::string& tag) {
  if (protocol.faces <= 0 || protocol.edits_per_face <= 0 || protocol.rounds <= 0) {
    throw DomainError("evaluation needs positive faces, edits and rounds");
  }
  if (!editor.trained()) throw NotReadyError("editor parameters are untrained");
  const BackendDims dims = backbone.generator->dims();
  if (editor.config().n_styles != dims.n_styles || editor.config().style_dim != dims.style_dim) {
    throw ConfigurationError("editor shape does not match the backend");
  }

  const int per_face = protocol.edits_per_face;
  std::vector<EditRecord> records(static_cast<std::size_t>(protocol.faces) * per_face);
  std::exception_ptr error;

#pragma omp parallel for schedule(dynamic)
  for (int f = 0; f < protocol.faces; ++f) {
    try {
      const std::uint64_t face_seed = derive_seed(protocol.seed, {kFaceStream, static_cast<std::uint64_t>(f)});
      const LatentCode w = backbone.generator->map(backbone.generator->sample_latent(face_seed));
      const Measurement original = measure(backbone, stats, w);
      Rng rng(derive_seed(face_seed, {kEditStream}));
      std::uniform_int_distribution<int> pick(0, static_cast<int>(kNumFeatures) - 1);
      std::normal_distribution<double> normal(0.0, 1.0);
      for (int e = 0; e < per_face; ++e) {
        const int j = pick(rng);
        const double t = normal(rng);
        EditResult r = edit(editor, backbone, stats, w, original, j, t);
        for (int round = 1; round < protocol.rounds; ++round) {
          r = edit(editor, backbone, stats, r.edited_latent, r.after, j, t);
        }
        const auto sj = static_cast<std::size_t>(j);
        EditRecord& rec = records[static_cast<std::size_t>(f) * per_face + e];
        rec.face = f;
        rec.feature = j;
        rec.target = t;
        rec.original = original.normalized[sj];
        rec.measured = r.after.normalized[sj];
        rec.pixel_error = pixel_error(original.output.image, r.after.output.image);
        rec.edit_error = edit_error(rec.measured, t);
        rec.entanglement = entanglement(r.after.normalized, original.normalized, j);
      }
    } catch (...) {
#pragma omp critical
      if (!error) error = std::current_exception();
    }
  }
  if (error) std::rethrow_exception(error);

  EvalReport report;
  report.tag = tag;
  report.faces = protocol.faces;
  report.edits_per_face = per_face;
  report.rounds = protocol.rounds;
  for (const auto& r : records) {
    report.pixel_error += r.pixel_error;
    report.edit_error += r.edit_error;
    report.entanglement += r.entanglement;
    report.target_distance += std::abs(r.target - r.original);
  }
  const double n = static_cast<double>(records.size());
  report.pixel_error /= n;
  report.edit_error /= n;
  report.entanglement /= n;
  report.target_distance /= n;
  report.edits = std::move(records);
  return report;
}

EvalReport evaluate(const Model& model, const EvalProtocol& protocol, const std::string& tag) {
  return evaluate(model.checkpoint.editor, model.backbone, model.stats, protocol, tag);
}

std::string format_report_table(std::span<const EvalReport> reports) {
  std::ostringstream os;
  os << pad("variant", 16) << pad("faces", 7) << pad("edits", 7) << pad("rounds", 8) << pad("pixel_err", 11)
     << pad("edit_err", 10) << pad("entangle", 10) << "target_dist\n";
  for (const auto& r : reports) {
    os << pad(r.tag.empty() ? "-" : r.tag, 16) << pad(std::to_string(r.faces), 7)
       << pad(std::to_string(r.edits_per_face), 7) << pad(std::to_string(r.rounds), 8)
       << pad(fixed(r.pixel_error, 5), 11) << pad(fixed(r.edit_error, 4), 10) << pad(fixed(r.entanglement, 4), 10)
       << fixed(r.target_distance, 4) << '\n';
  }
  return os.str();
}

std::string report_json(std::span<const EvalReport> reports, bool with_edits) {
  nlohmann::ordered_json j;
  j["format"] = "facectl-report";
  j["version"] = 1;
  j["reports"] = nlohmann::json::array();
  for (const auto& r : reports) j["reports"].push_back(summary_json(r, with_edits));
  return j.dump(2) + "\n";
}

void write_report(std::span<const EvalReport> reports, const std::filesystem::path& path) {
  std::filesystem::path json_path = path;
  json_path.replace_extension(".json");
  std::filesystem::path text_path = path;
  if (text_path == json_path) text_path.replace_extension(".txt");
  write_file_atomic(text_path, format_report_table(reports));
  write_file_atomic(json_path, report_json(reports));
}

// --------------------------------------------------------------- ablation

std::vector<AblationVariant> ablation_variants(const LossWeights& base) {
  std::vector<AblationVariant> v;
  auto with = [&](const std::string& name, auto&& change) {
    AblationVariant a{name, base, 1, ""};
    change(a.weights);
    v.push_back(a);
  };
  with("lambda_pix=0", [](LossWeights& w) { w.pix = 0.0; });
  with("lambda_feat=0", [](LossWeights& w) { w.feat = 0.0; });
  with("lambda_reg=0", [](LossWeights& w) { w.reg = 0.0; });
  with("lambda_cor=0", [](LossWeights& w) { w.cor = 0.0; });
  v.push_back({"full", base, 1, ""});
  v.push_back({"full-3x", base, 3, "full"});
  return v;
}

std::vector<AblationRow> ablation_suite(const TrainingConfig& base, const EvalProtocol& protocol,
                                        const std::filesystem::path& out_dir,
                                        const std::function<void(const std::string&)>& progress) {
  std::filesystem::create_directories(out_dir);
  const Backbone backbone = make_backbone(load_backend_descriptor(base.backend));
  const FeatureStats stats = load_stats(base.stats);
  const CorrelationMatrix corr = load_correlation(base.correlation);

  std::vector<AblationRow> rows;
  for (const auto& variant : ablation_variants(base.weights)) {
    AblationRow row;
    row.variant = variant;
    try {
      if (!variant.reuses.empty()) {
        const AblationRow* source = nullptr;
        for (const auto& r : rows) {
          if (r.variant.name == variant.reuses) source = &r;
        }
        if (!source || !source->ok) throw std::runtime_error("variant '" + variant.reuses + "' is unavailable");
        row.checkpoint = source->checkpoint;
      } else {
        TrainingConfig cfg = base;
        cfg.weights = variant.weights;
        row.checkpoint = out_dir / (variant.name + ".ckpt");
        const auto metrics = out_dir / (variant.name + ".metrics.jsonl");
        std::filesystem::remove(metrics);
        if (progress) progress("training " + variant.name);
        Trainer trainer(cfg, backbone, stats, corr);
        trainer.run(row.checkpoint, metrics);
      }
      if (progress) progress("evaluating " + variant.name);
      const Checkpoint ckpt = load_checkpoint(row.checkpoint);
      EvalProtocol p = protocol;
      p.rounds = variant.rounds;
      row.report = evaluate(ckpt.editor, backbone, stats, p, variant.name);
      row.ok = true;
    } catch (const std::exception& e) {
      row.ok = false;
      row.error = e.what();
    }
    rows.push_back(std::move(row));
  }

  std::vector<EvalReport> reports;
  for (const auto& r : rows) {
    if (r.ok) reports.push_back(r.report);
  }
  write_file_atomic(out_dir / "report.txt", format_ablation_table(rows));
  nlohmann::ordered_json j = nlohmann::json::parse(report_json(reports));
  j["failures"] = nlohmann::json::array();
  for (const auto& r : rows) {
    if (!r.ok) j["failures"].push_back({{"variant", r.variant.name}, {"error", r.error}});
  }
  write_file_atomic(out_dir / "report.json", j.dump(2) + "\n");
  return rows;
}

std::string format_ablation_table(std::span<const AblationRow> rows) {
  std::vector<EvalReport> ok;
  std::ostringstream failures;
  for (const auto& r : rows) {
    if (r.ok) {
      ok.push_back(r.report);
    } else {
      failures << pad(r.variant.name, 16) << "FAILED: " << r.error << '\n';
    }
  }
  return format_report_table(ok) + failures.str();
}

}  // namespace facectl
