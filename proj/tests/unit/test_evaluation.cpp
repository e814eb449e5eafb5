// Copyright (c) 2026 The facectl Authors
// SPDX-License-Identifier: Apache-2.0

#include <doctest.h>

#include <cmath>
#include <nlohmann/json.hpp>

#include "facectl/errors.hpp"
#include "facectl/evaluation.hpp"
#include "facectl/io.hpp"
#include "support/test_support.hpp"

using namespace facectl;
using namespace facectl::testing;

TEST_SUITE("evaluation") {
  TEST_CASE("metrics follow their definitions") {
    Image a(2, 2), b(2, 2);
    a.pixels = {0.0, 0.5, 1.0, 0.25};
    b.pixels = {0.5, 0.5, 0.0, 0.5};
    CHECK(pixel_error(a, b) == doctest::Approx((0.5 + 0.0 + 1.0 + 0.25) / 4.0));
    CHECK_THROWS_AS(pixel_error(a, Image(2, 3)), DomainError);
    CHECK(edit_error(0.3, -0.2) == doctest::Approx(0.5));

    FeatureVector orig{}, meas{};
    for (std::size_t i = 0; i < kNumFeatures; ++i) meas[i] = 0.1 * static_cast<double>(i);
    meas[4] = 100.0;
    double want = 0.0;
    for (std::size_t i = 0; i < kNumFeatures; ++i) {
      if (i != 4) want += std::abs(meas[i]);
    }
    CHECK(entanglement(meas, orig, 4) == doctest::Approx(want / 22.0));
    CHECK(entanglement(orig, orig, 0) == 0.0);
    CHECK_THROWS_AS(entanglement(meas, orig, 23), DomainError);
  }

  TEST_CASE("evaluation is deterministic and aggregates its records") {
    const World world = make_world(tiny_descriptor(), 400);
    EditorNetwork editor(tiny_editor_config(world.backbone.generator->dims()), 1);
    EvalProtocol p;
    p.faces = 12;
    p.edits_per_face = 3;
    p.seed = 5;
    CHECK_THROWS_AS(evaluate(editor, world.backbone, world.stats, p), NotReadyError);
    editor.set_trained(true);

    const EvalReport a = evaluate(editor, world.backbone, world.stats, p, "x");
    const EvalReport b = evaluate(editor, world.backbone, world.stats, p, "x");
    REQUIRE(a.edits.size() == 36);
    CHECK(a.edit_error == b.edit_error);
    CHECK(a.pixel_error == b.pixel_error);
    double err = 0.0, dist = 0.0;
    for (const auto& r : a.edits) {
      err += r.edit_error;
      dist += std::abs(r.target - r.original);
      CHECK(r.edit_error == std::abs(r.measured - r.target));
    }
    CHECK(a.edit_error == doctest::Approx(err / 36.0).epsilon(1e-14));
    CHECK(a.target_distance == doctest::Approx(dist / 36.0).epsilon(1e-14));

    EvalProtocol other = p;
    other.seed = 6;
    CHECK(evaluate(editor, world.backbone, world.stats, other).edit_error != a.edit_error);

    EvalProtocol three = p;
    three.rounds = 3;
    const EvalReport c = evaluate(editor, world.backbone, world.stats, three);
    CHECK(c.rounds == 3);
    CHECK(c.target_distance == a.target_distance);

    EvalProtocol bad = p;
    bad.faces = 0;
    CHECK_THROWS_AS(evaluate(editor, world.backbone, world.stats, bad), DomainError);
  }

  TEST_CASE("reports are written as a table and JSON") {
    TempDir dir;
    EvalReport r;
    r.tag = "full";
    r.faces = 10;
    r.edits_per_face = 2;
    r.pixel_error = 0.01;
    r.edit_error = 0.3;
    r.entanglement = 0.1;
    r.target_distance = 1.1;
    const std::vector<EvalReport> reports{r};
    write_report(reports, dir / "report.txt");
    const std::string table = read_file(dir / "report.txt");
    CHECK(table.find("edit_err") != std::string::npos);
    CHECK(table.find("full") != std::string::npos);
    const auto j = nlohmann::json::parse(read_file(dir / "report.json"));
    CHECK(j.at("format") == "facectl-report");
    CHECK(j.at("reports")[0].at("edit_error").get<double>() == 0.3);
  }

  TEST_CASE("ablation variants switch off one weight each") {
    const auto v = ablation_variants(LossWeights{});
    REQUIRE(v.size() == 6);
    CHECK(v[0].name == "lambda_pix=0");
    CHECK(v[0].weights.pix == 0.0);
    CHECK(v[1].weights.feat == 0.0);
    CHECK(v[2].weights.reg == 0.0);
    CHECK(v[3].weights.cor == 0.0);
    CHECK(v[4].weights == LossWeights{});
    CHECK(v[5].rounds == 3);
    CHECK(v[5].reuses == "full");
  }

  TEST_CASE("ablation suite trains, evaluates and reports each variant") {
    TempDir dir;
    const World world = make_world(tiny_descriptor(), 400);
    save_backend_descriptor(tiny_descriptor(), dir / "backend.json");
    save_stats(world.stats, dir / "stats.txt");
    save_correlation(world.corr, dir / "corr.txt");
    TrainingConfig cfg;
    cfg.backend = dir / "backend.json";
    cfg.stats = dir / "stats.txt";
    cfg.correlation = dir / "corr.txt";
    cfg.steps = 2;
    cfg.batch_size = 2;
    cfg.editor = tiny_editor_config(tiny_descriptor().dims);
    EvalProtocol p;
    p.faces = 4;
    p.edits_per_face = 2;
    std::vector<std::string> progress;
    const auto rows = ablation_suite(cfg, p, dir / "abl", [&](const std::string& m) { progress.push_back(m); });
    REQUIRE(rows.size() == 6);
    for (const auto& r : rows) CHECK_MESSAGE(r.ok, r.error);
    CHECK(rows[5].checkpoint == rows[4].checkpoint);
    CHECK(rows[5].report.rounds == 3);
    CHECK(std::filesystem::exists(dir / "abl/lambda_reg=0.ckpt"));
    CHECK(std::filesystem::exists(dir / "abl/lambda_reg=0.metrics.jsonl"));
    const auto j = nlohmann::json::parse(read_file(dir / "abl/report.json"));
    CHECK(j.at("reports").size() == 6);
    CHECK(j.at("failures").empty());
    CHECK(format_ablation_table(rows).find("full-3x") != std::string::npos);
    CHECK(progress.size() == 11);
  }
}
