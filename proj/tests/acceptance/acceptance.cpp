// Copyright (c) 2026 The facectl Authors
// SPDX-License-Identifier: Apache-2.0
//
// Acceptance suite: prints one PASS/FAIL line per criterion and exits
// non-zero if any criterion fails. Trained checkpoints are cached by config
// hash so reruns only re-evaluate.

#include <CLI11.hpp>

#include <algorithm>
#include <bit>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <functional>
#include <limits>
#include <nlohmann/json.hpp>
#include <set>
#include <string>
#include <vector>

#include "facectl/edit_service.hpp"
#include "facectl/evaluation.hpp"
#include "facectl/feature_stats.hpp"
#include "facectl/io.hpp"
#include "facectl/landmarks.hpp"
#include "facectl/losses.hpp"
#include "facectl/random.hpp"
#include "facectl/training.hpp"
#include "support/feature_oracle.hpp"
#include "support/gradient_check.hpp"
#include "support/loss_oracle.hpp"
#include "support/test_support.hpp"

// After Eigen: <resolv.h> defines a `_res` macro.
#include <httplib.h>

namespace fs = std::filesystem;
using namespace facectl;
using namespace facectl::testing;
using nlohmann::json;

namespace {

struct Outcome {
  bool pass = false;
  std::string detail;
};

std::string fmt(const char* f, double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, f, v);
  return buf;
}

double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

struct Context {
  fs::path configs;
  fs::path cache;
  EvalProtocol protocol{200, 5, 1, 1};
};

// ---------------------------------------------------------------------------
// Pure checks.

Outcome formula_oracle() {
  Rng rng(20260101);
  double worst = 0.0;
  for (int s = 0; s < 1000; ++s) {
    const LandmarkSet lm = random_landmarks(rng);
    const auto expected = oracle_features(lm);
    const FeatureVector all = compute_all_features(lm);
    for (std::size_t i = 0; i < kNumFeatures; ++i) {
      worst = std::max(worst, std::abs(all[i] - expected[i]));
      worst = std::max(worst, std::abs(compute_feature(lm, static_cast<int>(i)) - expected[i]));
    }
  }
  return {worst < 1e-12, "1000 sets, max|diff| " + fmt("%.3g", worst)};
}

Outcome translation_invariance() {
  Rng rng(20260102);
  std::uniform_real_distribution<double> shift(-0.25, 0.25);
  int absolute = 0;
  for (const auto& f : feature_catalog()) absolute += f.category == FeatureCategory::kAbsoluteDistance;
  double relative_worst = 0.0, absolute_worst = 0.0, chin_worst = 0.0;
  for (int s = 0; s < 100; ++s) {
    const LandmarkSet lm = random_landmarks(rng);
    const FeatureVector base = compute_all_features(lm);
    for (int t = 0; t < 20; ++t) {
      const double dx = shift(rng), dy = shift(rng);
      const FeatureVector moved = compute_all_features(lm.translated(dx, dy));
      const auto expected_shift = oracle_translation_shift(dx, dy);
      for (std::size_t i = 0; i < kNumFeatures; ++i) {
        const double err = std::abs(moved[i] - base[i] - expected_shift[i]);
        if (feature_catalog()[i].category == FeatureCategory::kAbsoluteDistance) {
          absolute_worst = std::max(absolute_worst, err);
        } else {
          relative_worst = std::max(relative_worst, err);
        }
      }
      chin_worst = std::max(chin_worst, std::abs(moved[18] - base[18] - dy));
    }
  }
  const bool pass = absolute == 5 && relative_worst < 1e-12 && absolute_worst < 1e-12 && chin_worst < 1e-12;
  return {pass, "100x20 translations, relative max " + fmt("%.3g", relative_worst) + ", absolute shift max err " +
                    fmt("%.3g", absolute_worst) + ", chin-length err " + fmt("%.3g", chin_worst)};
}

Outcome normalization_and_correlation(const Context& ctx) {
  const Backbone backbone = make_backbone(load_backend_descriptor(ctx.configs / "backend.json"));
  const auto corpus = feature_corpus(backbone, 10000, 12345);
  const FeatureStats stats = fit_stats(corpus, "acceptance");
  const auto n = static_cast<double>(corpus.size());

  double mean_worst = 0.0, std_worst = 0.0;
  for (std::size_t j = 0; j < kNumFeatures; ++j) {
    double sum = 0.0;
    std::vector<double> z;
    for (const auto& v : corpus) z.push_back(normalize(v, stats)[j]);
    for (double x : z) sum += x;
    const double mean = sum / n;
    double ss = 0.0;
    for (double x : z) ss += (x - mean) * (x - mean);
    mean_worst = std::max(mean_worst, std::abs(mean));
    std_worst = std::max(std_worst, std::abs(std::sqrt(ss / (n - 1.0)) - 1.0));
  }

  const CorrelationMatrix c = correlation_matrix(corpus);
  double pearson_worst = 0.0;
  bool symmetric = true, unit_diagonal = true;
  for (std::size_t a = 0; a < kNumFeatures; ++a) {
    unit_diagonal = unit_diagonal && c(a, a) == 1.0;
    for (std::size_t b = 0; b < kNumFeatures; ++b) {
      symmetric = symmetric && c(a, b) == c(b, a);
      double ma = 0.0, mb = 0.0;
      for (const auto& v : corpus) {
        ma += v[a];
        mb += v[b];
      }
      ma /= n;
      mb /= n;
      double sab = 0.0, saa = 0.0, sbb = 0.0;
      for (const auto& v : corpus) {
        sab += (v[a] - ma) * (v[b] - mb);
        saa += (v[a] - ma) * (v[a] - ma);
        sbb += (v[b] - mb) * (v[b] - mb);
      }
      pearson_worst = std::max(pearson_worst, std::abs(c(a, b) - sab / std::sqrt(saa * sbb)));
    }
  }
  const bool pass = mean_worst < 0.02 && std_worst < 0.02 && pearson_worst < 1e-9 && symmetric && unit_diagonal;
  return {pass, "10000 samples, max|mean| " + fmt("%.3g", mean_worst) + ", max|std-1| " + fmt("%.3g", std_worst) +
                    ", Pearson max diff " + fmt("%.3g", pearson_worst) + (symmetric ? ", symmetric" : ", ASYMMETRIC") +
                    (unit_diagonal ? ", unit diagonal" : ", diagonal != 1")};
}

Outcome loss_exactness() {
  Rng rng(20260104);
  double oracle_worst = 0.0;
  for (int trial = 0; trial < 50; ++trial) {
    const auto corr = fabricate_correlation(rng);
    std::uniform_real_distribution<double> u(0.0, 2.0);
    const LossWeights w{u(rng), u(rng), u(rng), u(rng), u(rng)};
    const auto batch = fabricate_batch(rng, 8, 64, 48);
    std::vector<LossTerms> terms;
    for (const auto& s : batch) {
      Image a(8, 8), b(8, 8);
      a.pixels = s.image;
      b.pixels = s.image_edit;
      LossTerms t;
      t.pix = loss_pix(a, b);
      t.feat = loss_feat(s.feat, s.feat_edit);
      t.sff = loss_sff(s.m_pred, s.j, s.target, s.m_orig, corr, w.reg, w.cor);
      oracle_worst = std::max(oracle_worst, std::abs(t.pix - oracle_mse(s.image, s.image_edit)));
      oracle_worst = std::max(oracle_worst, std::abs(t.feat - oracle_mse(s.feat, s.feat_edit)));
      oracle_worst = std::max(oracle_worst, std::abs(t.sff - oracle_sff(s, corr, w.reg, w.cor)));
      terms.push_back(t);
    }
    oracle_worst = std::max(oracle_worst, std::abs(total_loss(terms, w).total - oracle_total(batch, corr, w)));
  }

  // s_e = 0 through the real backbone and the training loss.
  const World world = make_world(tiny_descriptor(), 500);
  EditorNetwork editor(tiny_editor_config(world.backbone.generator->dims()), 5);
  editor.parameter("output.weight").value.setZero();
  editor.parameter("output.bias").value.setZero();
  const auto samples = sample_batch(world.backbone, world.stats, 8, 11, 0);
  const BatchResult zero = batch_loss(editor, world.backbone, world.stats, world.corr, LossWeights{}, samples, false);
  bool zero_exact = zero.loss.pix == 0.0 && zero.loss.feat == 0.0;
  for (const auto& s : samples) {
    const ManipulationVector none(s.latent.n_styles(), s.latent.style_dim());
    const SynthesisOutput edited = world.backbone.generator->synthesize(apply_manipulation(s.latent, 0.7, none));
    zero_exact = zero_exact && loss_pix(s.original.output.image, edited.image) == 0.0 &&
                 loss_feat(s.original.output.last_block_features, edited.last_block_features) == 0.0;
  }

  // |c| = 1 and lambda_cor = 1: only the on-target term remains.
  bool relaxed_exact = true;
  std::bernoulli_distribution sign(0.5);
  for (int trial = 0; trial < 200; ++trial) {
    CorrelationMatrix c;
    for (auto& row : c.entries)
      for (auto& e : row) e = sign(rng) ? 1.0 : -1.0;
    auto s = fabricate_batch(rng, 1, 1, 1)[0];
    relaxed_exact = relaxed_exact && loss_sff(s.m_pred, s.j, s.m_pred[s.j], s.m_orig, c, 1.0, 1.0) == 0.0;
    const double on_target = (s.m_pred[s.j] - s.target) * (s.m_pred[s.j] - s.target);
    relaxed_exact = relaxed_exact && loss_sff(s.m_pred, s.j, s.target, s.m_orig, c, 1.0, 1.0) == on_target;
  }
  const bool pass = oracle_worst < 1e-10 && zero_exact && relaxed_exact;
  return {pass, "oracle max diff " + fmt("%.3g", oracle_worst) + (zero_exact ? ", s_e=0 gives zero loss" : ", s_e=0 NONZERO") +
                    (relaxed_exact ? ", full relaxation exact" : ", relaxation NOT exact")};
}

Outcome gradient_check() {
  const auto r = tiny_gradient_check(LossWeights{}, 0, 3);
  return {r.max_relative_error < 1e-4 && r.checked > 0,
          std::to_string(r.checked) + " parameters, max rel err " + fmt("%.3g", r.max_relative_error) + " (" + r.worst + ")"};
}

// ---------------------------------------------------------------------------
// Trained checks.

struct Trained {
  fs::path checkpoint;
  double train_seconds = 0.0;
  bool cached = false;
  std::uint64_t live_checksum_before = 0;
  std::uint64_t live_checksum_after = 0;
};

TrainingConfig desk_config(const Context& ctx, std::uint64_t seed, double reg) {
  TrainingConfig c = load_training_config(ctx.configs / "desk.json");
  c.seed = seed;
  c.weights.reg = reg;
  c.checkpoint_every = 0;
  return c;
}

Trained train_cached(const Context& ctx, const TrainingConfig& cfg, const std::string& tag) {
  Trained t;
  t.checkpoint = ctx.cache / (tag + "-" + config_hash(cfg) + ".ckpt");
  const fs::path timing = fs::path(t.checkpoint.string() + ".seconds");
  const Backbone backbone = make_backbone(load_backend_descriptor(cfg.backend));
  t.live_checksum_before = backbone.checksum();
  if (fs::exists(t.checkpoint) && fs::exists(timing) && load_checkpoint(t.checkpoint).step == cfg.steps) {
    t.cached = true;
    std::string text = read_file(timing);
    text.erase(text.find_last_not_of(" \n") + 1);
    t.train_seconds = parse_double(text);
    t.live_checksum_after = backbone.checksum();
    return t;
  }
  std::fprintf(stderr, "  training %s (%lld steps)\n", tag.c_str(), cfg.steps);
  const auto t0 = std::chrono::steady_clock::now();
  Trainer trainer(cfg, backbone, load_stats(cfg.stats), load_correlation(cfg.correlation));
  trainer.run(t.checkpoint, fs::path(t.checkpoint.string() + ".metrics.jsonl"), [&](const StepRecord& r) {
    if (r.step % 1000 == 0) std::fprintf(stderr, "    step %lld loss %.5f\n", r.step, r.result.loss.total);
  });
  t.train_seconds = seconds_since(t0);
  t.live_checksum_after = backbone.checksum();
  write_file_atomic(timing, format_double(t.train_seconds) + "\n");
  return t;
}

EvalReport evaluate_rounds(const Model& model, const Context& ctx, int rounds) {
  EvalProtocol p = ctx.protocol;
  p.rounds = rounds;
  return evaluate(model, p);
}

Outcome desk_training(const Context& ctx) {
  const auto t0 = std::chrono::steady_clock::now();
  const TrainingConfig cfg = desk_config(ctx, 0, 0.1);
  const Trained t = train_cached(ctx, cfg, "full-seed0");
  const Model model = load_model(t.checkpoint);
  const EvalReport trained = evaluate_rounds(model, ctx, 1);

  // The same editor at step 0, allowed to edit.
  Trainer fresh(cfg, model.backbone, model.stats, model.correlation);
  EditorNetwork untrained = fresh.editor();
  untrained.set_trained(true);
  EvalProtocol p = ctx.protocol;
  const EvalReport baseline = evaluate(untrained, model.backbone, model.stats, p);
  const double untrained_error = std::min(baseline.edit_error, baseline.target_distance);

  const bool a = trained.edit_error < 0.6 && trained.edit_error <= 0.5 * untrained_error;
  const bool b = trained.entanglement < trained.target_distance;
  const bool c = t.live_checksum_before == t.live_checksum_after &&
                 model.checkpoint.backbone_checksum == t.live_checksum_before;
  const double runtime = t.train_seconds + seconds_since(t0);
  const int edits = static_cast<int>(trained.edits.size());
  return {a && b && c && edits == 1000 && runtime < 1800.0,
          std::to_string(edits) + " held-out edits: (a) edit error " + fmt("%.4f", trained.edit_error) +
              " vs untrained " + fmt("%.4f", untrained_error) + " (random init " + fmt("%.4f", baseline.edit_error) +
              ", no-op " + fmt("%.4f", baseline.target_distance) + "); (b) entanglement " +
              fmt("%.4f", trained.entanglement) + " vs mean |target-original| " + fmt("%.4f", trained.target_distance) +
              "; (c) backbone checksum " + (c ? "unchanged" : "CHANGED") + "; training " +
              fmt("%.0f s", t.train_seconds) + (t.cached ? " (cached)" : "")};
}

Outcome ablation(const Context& ctx) {
  const auto t0 = std::chrono::steady_clock::now();
  int reg_wins = 0, rounds_wins = 0;
  double train_seconds = 0.0;
  std::string detail;
  for (std::uint64_t seed = 0; seed < 3; ++seed) {
    const Trained full = train_cached(ctx, desk_config(ctx, seed, 0.1), "full-seed" + std::to_string(seed));
    const Trained reg0 = train_cached(ctx, desk_config(ctx, seed, 0.0), "reg0-seed" + std::to_string(seed));
    train_seconds += full.train_seconds + reg0.train_seconds;
    const Model full_model = load_model(full.checkpoint);
    const EvalReport f1 = evaluate_rounds(full_model, ctx, 1);
    const EvalReport f3 = evaluate_rounds(full_model, ctx, 3);
    const EvalReport r0 = evaluate_rounds(load_model(reg0.checkpoint), ctx, 1);
    const bool reg_ok = r0.entanglement > f1.entanglement;
    const bool rounds_ok = f3.edit_error < f1.edit_error && f3.pixel_error >= f1.pixel_error;
    reg_wins += reg_ok;
    rounds_wins += rounds_ok;
    detail += "; seed " + std::to_string(seed) + ": ent reg0 " + fmt("%.4f", r0.entanglement) + " vs full " +
              fmt("%.4f", f1.entanglement) + ", 3x/1x edit " + fmt("%.4f", f3.edit_error) + "/" +
              fmt("%.4f", f1.edit_error) + ", pixel " + fmt("%.5f", f3.pixel_error) + "/" + fmt("%.5f", f1.pixel_error);
  }
  const double runtime = train_seconds + seconds_since(t0);
  return {reg_wins >= 2 && rounds_wins >= 2 && runtime < 4 * 3600.0,
          "reg=0 more entangled in " + std::to_string(reg_wins) + "/3, 3x more accurate and not cleaner in " +
              std::to_string(rounds_wins) + "/3 seeds" + detail};
}

// ---------------------------------------------------------------------------
// Service checks over real HTTP.

struct Step {
  int feature;
  double target;
  std::string unit;
};

std::vector<Step> transcript() {
  Rng rng(20260108);
  std::uniform_int_distribution<int> feature(0, 22);
  std::uniform_real_distribution<double> slider(0.05, 0.95);
  std::normal_distribution<double> normal(0.0, 0.8);
  std::vector<Step> out;
  for (int i = 0; i < 20; ++i) {
    const int f = feature(rng);
    if (i % 2 == 0) {
      out.push_back({f, slider(rng), "slider"});
    } else {
      out.push_back({f, normal(rng), "normalized"});
    }
  }
  return out;
}

/// A service process: loads the checkpoint from disk and listens on an ephemeral port.
class Instance {
 public:
  Instance(const fs::path& checkpoint, const fs::path& snapshots) {
    ServiceOptions opts;
    opts.snapshot_dir = snapshots;
    service_ = std::make_unique<EditService>(load_model(checkpoint), opts);
    server_ = std::make_unique<HttpServer>(*service_, "127.0.0.1", 0);
    client_ = std::make_unique<httplib::Client>("127.0.0.1", server_->port());
  }
  ~Instance() { server_->stop(); }

  json post(const std::string& path, const json& body, int expect) {
    auto r = client_->Post(path, body.dump(), "application/json");
    if (!r || r->status != expect) {
      throw std::runtime_error("POST " + path + " failed: " + (r ? std::to_string(r->status) + " " + r->body : "no response"));
    }
    return json::parse(r->body);
  }
  json get(const std::string& path) {
    auto r = client_->Get(path);
    if (!r || r->status != 200) throw std::runtime_error("GET " + path + " failed");
    return json::parse(r->body);
  }

 private:
  std::unique_ptr<EditService> service_;
  std::unique_ptr<HttpServer> server_;
  std::unique_ptr<httplib::Client> client_;
};

using View = std::vector<std::uint64_t>;

/// Bit patterns of the normalized values, so equality is bitwise.
View view_bits(const json& summary) {
  View v;
  for (const auto& f : summary.at("features")) v.push_back(std::bit_cast<std::uint64_t>(f.at("normalized").get<double>()));
  return v;
}

json edit_request(const Step& s) { return {{"feature", s.feature}, {"target", s.target}, {"unit", s.unit}}; }

Outcome service_determinism(const Context& ctx, const fs::path& checkpoint) {
  const auto t0 = std::chrono::steady_clock::now();
  const auto steps = transcript();
  const json create = {{"seed", 424242}};

  auto full_replay = [&](Instance& inst) {
    std::vector<View> views;
    const std::string id = inst.post("/sessions", create, 201).at("session");
    views.push_back(view_bits(inst.get("/sessions/" + id + "/features")));
    for (const auto& s : steps) views.push_back(view_bits(inst.post("/sessions/" + id + "/edits", edit_request(s), 200)));
    return views;
  };

  // Three independent starts of the service, each replaying the transcript.
  std::vector<std::vector<View>> replays;
  for (int start = 0; start < 3; ++start) {
    Instance inst(checkpoint, {});
    replays.push_back(full_replay(inst));
  }
  bool replay_equal = replays[0] == replays[1] && replays[0] == replays[2];

  // One session continued across two restarts from snapshots.
  const fs::path snapshots = ctx.cache / "service-snapshots";
  fs::remove_all(snapshots);
  std::vector<View> continued;
  std::string id;
  bool restored_equal = true;
  const int cuts[] = {0, 7, 14, 20};
  for (int part = 0; part < 3; ++part) {
    Instance inst(checkpoint, snapshots);
    if (part == 0) {
      const json s = inst.post("/sessions", create, 201);
      id = s.at("session");
      continued.push_back(view_bits(s));
    } else {
      restored_equal = restored_equal && view_bits(inst.get("/sessions/" + id + "/features")) == continued.back();
    }
    for (int i = cuts[part]; i < cuts[part + 1]; ++i) {
      continued.push_back(view_bits(inst.post("/sessions/" + id + "/edits", edit_request(steps[static_cast<std::size_t>(i)]), 200)));
    }
  }
  fs::remove_all(snapshots);
  const bool continued_equal = continued == replays[0];
  const double runtime = seconds_since(t0);
  return {replay_equal && continued_equal && restored_equal && runtime < 60.0,
          "20 edits: 3 fresh starts " + std::string(replay_equal ? "bitwise equal" : "DIFFER") +
              ", session across 2 restarts " + (continued_equal && restored_equal ? "bitwise equal" : "DIFFERS")};
}

Outcome edit_equation(const fs::path& checkpoint) {
  Instance inst(checkpoint, {});
  Rng rng(20260109);
  std::uniform_int_distribution<int> feature(0, 22);
  std::normal_distribution<double> target(0.0, 1.0);
  double worst = 0.0;
  bool within = true, chained = true;
  int edits = 0;
  for (int session = 0; session < 5; ++session) {
    const std::string id = inst.post("/sessions", {{"seed", 9000 + session}}, 201).at("session");
    json previous_edit;
    for (int e = 0; e < 20; ++e) {
      const json r = inst.post("/sessions/" + id + "/edits",
                               {{"feature", feature(rng)}, {"target", target(rng)}, {"unit", "normalized"}}, 200);
      const double k = r.at("k");
      const json &w = r.at("w"), &s = r.at("s_e"), &we = r.at("w_edit");
      for (std::size_t a = 0; a < w.size(); ++a) {
        for (std::size_t b = 0; b < w[a].size(); ++b) {
          const double expected = w[a][b].get<double>() + k * s[a][b].get<double>();
          const double diff = std::abs(we[a][b].get<double>() - expected);
          worst = std::max(worst, diff);
          within = within && diff <= std::numeric_limits<double>::epsilon() * std::max(1.0, std::abs(expected));
        }
      }
      if (!previous_edit.is_null()) chained = chained && previous_edit == w;
      previous_edit = we;
      ++edits;
    }
  }
  return {within && chained && edits == 100,
          std::to_string(edits) + " edits, max |w_edit - (w + k s_e)| " + fmt("%.3g", worst) +
              (chained ? ", each edit starts from the previous w_edit" : ", CHAIN BROKEN")};
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"facectl acceptance suite"};
  Context ctx;
  ctx.configs = fs::path(FACECTL_SOURCE_DIR) / "configs";
  ctx.cache = "acceptance-cache";
  std::vector<int> only;
  app.add_option("--configs", ctx.configs, "Directory with desk.json and its backend/stats files")->capture_default_str();
  app.add_option("--cache", ctx.cache, "Checkpoint cache directory")->capture_default_str();
  app.add_option("--only", only, "Run only these criteria (1-9)");
  CLI11_PARSE(app, argc, argv);
  fs::create_directories(ctx.cache);
  ctx.cache = fs::absolute(ctx.cache);

  auto desk_checkpoint = [&] { return train_cached(ctx, desk_config(ctx, 0, 0.1), "full-seed0").checkpoint; };

  struct Criterion {
    int id;
    std::string name;
    std::function<Outcome()> run;
    double budget_seconds;  // 0: the check accounts for its own runtime
  };
  const std::vector<Criterion> criteria = {
      {1, "feature formulas match direct evaluation", formula_oracle, 5.0},
      {2, "translation invariance and closed-form shifts", translation_invariance, 5.0},
      {3, "normalization and correlation", [&] { return normalization_and_correlation(ctx); }, 120.0},
      {4, "loss exactness", loss_exactness, 10.0},
      {5, "editor gradients vs finite differences", gradient_check, 120.0},
      {6, "desk training", [&] { return desk_training(ctx); }, 0.0},
      {7, "ablation orderings over 3 seeds", [&] { return ablation(ctx); }, 0.0},
      {8, "service determinism across restarts", [&] { return service_determinism(ctx, desk_checkpoint()); }, 0.0},
      {9, "edit equation on service edits", [&] { return edit_equation(desk_checkpoint()); }, 0.0},
  };

  int failures = 0;
  for (const auto& c : criteria) {
    if (!only.empty() && std::find(only.begin(), only.end(), c.id) == only.end()) continue;
    const auto t0 = std::chrono::steady_clock::now();
    Outcome o;
    try {
      o = c.run();
    } catch (const std::exception& e) {
      o = {false, std::string("error: ") + e.what()};
    }
    const double elapsed = seconds_since(t0);
    if (c.budget_seconds > 0.0 && elapsed >= c.budget_seconds) {
      o.pass = false;
      o.detail += "; over the " + fmt("%.0f s", c.budget_seconds) + " budget";
    }
    failures += !o.pass;
    std::printf("%s [%d] %s: %s (%.1f s)\n", o.pass ? "PASS" : "FAIL", c.id, c.name.c_str(), o.detail.c_str(), elapsed);
    std::fflush(stdout);
  }
  return failures == 0 ? 0 : 1;
}
