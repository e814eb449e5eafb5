// Copyright (c) 2026 The facectl Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <span>
#include <string>
#include <vector>

#include "facectl/editor_network.hpp"
#include "facectl/training.hpp"

namespace facectl {

/// Mean absolute pixel difference. Throws DomainError on size mismatch.
double pixel_error(const Image& original, const Image& edited);
/// |measured - target|
double edit_error(double measured, double target);
/// Mean over i != j of |measured[i] - original[i]|.
double entanglement(const FeatureVector& measured, const FeatureVector& original, int j);

struct EvalProtocol {
  int faces = 1000;
  int edits_per_face = 5;
  std::uint64_t seed = 0;
  int rounds = 1;
};

struct EditRecord {
  int face = 0;
  int feature = 0;
  double target = 0.0;
  double original = 0.0;
  double measured = 0.0;
  double pixel_error = 0.0;
  double edit_error = 0.0;
  double entanglement = 0.0;
};

struct EvalReport {
  std::string tag;
  int faces = 0;
  int edits_per_face = 0;
  int rounds = 1;
  double pixel_error = 0.0;
  double edit_error = 0.0;
  double entanglement = 0.0;
  /// Mean |target - original| of the edited feature: the edit error of an editor that does nothing.
  double target_distance = 0.0;
  std::vector<EditRecord> edits;
};

/// Face f uses latent seed derive_seed(seed, {stream, f}); each of its edits
/// draws j uniformly and the target from N(0, 1). Faces run in parallel and
/// are aggregated in index order. Throws NotReadyError for an untrained editor.
EvalReport evaluate(const EditorNetwork& editor, const Backbone& backbone, const FeatureStats& stats,
                    const EvalProtocol& protocol, const std::string& tag = "");
EvalReport evaluate(const Model& model, const EvalProtocol& protocol, const std::string& tag = "");

std::string format_report_table(std::span<const EvalReport> reports);
/// Summary fields only; per-edit records are omitted unless `with_edits`.
std::string report_json(std::span<const EvalReport> reports, bool with_edits = false);
/// Writes the table to `path` and the JSON record next to it with a .json extension.
void write_report(std::span<const EvalReport> reports, const std::filesystem::path& path);

struct AblationVariant {
  std::string name;
  LossWeights weights;
  /// Evaluated with this many edit rounds.
  int rounds = 1;
  /// Name of the variant whose checkpoint is reused instead of training.
  std::string reuses;
};

/// lambda_pix=0, lambda_feat=0, lambda_reg=0, lambda_cor=0, full, full-3x.
std::vector<AblationVariant> ablation_variants(const LossWeights& base);

struct AblationRow {
  AblationVariant variant;
  bool ok = false;
  std::string error;
  EvalReport report;
  std::filesystem::path checkpoint;
};

/// Trains each variant (sharing the base seed) into `out_dir`, evaluates it,
/// and writes report.txt / report.json. A failing variant is reported with
/// its error and does not stop the others.
std::vector<AblationRow> ablation_suite(const TrainingConfig& base, const EvalProtocol& protocol,
                                        const std::filesystem::path& out_dir,
                                        const std::function<void(const std::string&)>& progress = {});

std::string format_ablation_table(std::span<const AblationRow> rows);

}  // namespace facectl
