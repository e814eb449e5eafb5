// Copyright (c) 2026 The facectl Authors
// SPDX-License-Identifier: Apache-2.0

#include "facectl/training.hpp"

#include <chrono>
#include <cmath>
#include <exception>
#include <fstream>
#include <nlohmann/json.hpp>
#include <random>
#include <sstream>

#include "facectl/archive.hpp"
#include "facectl/errors.hpp"
#include "facectl/io.hpp"
#include "facectl/random.hpp"

namespace facectl {

namespace {

constexpr std::uint64_t kEditorInitStream = 0x6564;
constexpr std::uint64_t kChoiceStream = 0x6a74;
constexpr char kCheckpointKind[] = "checkpoint";

std::filesystem::path resolve(const std::filesystem::path& p, const std::filesystem::path& base) {
  if (p.empty() || p.is_absolute() || base.empty()) return p;
  return (base / p).lexically_normal();
}

nlohmann::ordered_json config_to_json(const TrainingConfig& c) {
  nlohmann::ordered_json j;
  j["format"] = "facectl-training";
  j["version"] = 1;
  j["backend"] = c.backend.string();
  j["stats"] = c.stats.string();
  j["correlation"] = c.correlation.string();
  j["seed"] = c.seed;
  j["steps"] = c.steps;
  j["batch_size"] = c.batch_size;
  j["learning_rate"] = c.learning_rate;
  j["weights"] = {{"pix", c.weights.pix},
                  {"feat", c.weights.feat},
                  {"sff", c.weights.sff},
                  {"reg", c.weights.reg},
                  {"cor", c.weights.cor}};
  j["editor"] = {{"layers", c.editor.layers},
                 {"heads", c.editor.heads},
                 {"ffn_multiplier", c.editor.ffn_multiplier},
                 {"scale_hidden", c.editor.scale_hidden},
                 {"output_init_std", c.editor.output_init_std}};
  j["log_every"] = c.log_every;
  j["checkpoint_every"] = c.checkpoint_every;
  return j;
}

TrainingConfig config_from_json(const nlohmann::json& j, const std::filesystem::path& base_dir) {
  TrainingConfig c;
  try {
    if (j.contains("version") && j.at("version").get<int>() != 1) {
      throw ConfigurationError("unsupported training config version");
    }
    c.backend = resolve(j.at("backend").get<std::string>(), base_dir);
    c.stats = resolve(j.at("stats").get<std::string>(), base_dir);
    c.correlation = resolve(j.at("correlation").get<std::string>(), base_dir);
    c.seed = j.value("seed", c.seed);
    c.steps = j.value("steps", c.steps);
    c.batch_size = j.value("batch_size", c.batch_size);
    c.learning_rate = j.value("learning_rate", c.learning_rate);
    if (j.contains("weights")) {
      const auto& w = j.at("weights");
      c.weights.pix = w.value("pix", c.weights.pix);
      c.weights.feat = w.value("feat", c.weights.feat);
      c.weights.sff = w.value("sff", c.weights.sff);
      c.weights.reg = w.value("reg", c.weights.reg);
      c.weights.cor = w.value("cor", c.weights.cor);
    }
    if (j.contains("editor")) {
      const auto& e = j.at("editor");
      c.editor.layers = e.value("layers", c.editor.layers);
      c.editor.heads = e.value("heads", c.editor.heads);
      c.editor.ffn_multiplier = e.value("ffn_multiplier", c.editor.ffn_multiplier);
      c.editor.scale_hidden = e.value("scale_hidden", c.editor.scale_hidden);
      c.editor.output_init_std = e.value("output_init_std", c.editor.output_init_std);
    }
    c.log_every = j.value("log_every", c.log_every);
    c.checkpoint_every = j.value("checkpoint_every", c.checkpoint_every);
  } catch (const nlohmann::json::exception& e) {
    throw ConfigurationError(std::string("bad training config: ") + e.what());
  }
  const auto& w = c.weights;
  if (w.pix < 0 || w.feat < 0 || w.sff < 0 || w.reg < 0 || w.cor < 0) {
    throw ConfigurationError("loss weights must be non-negative");
  }
  if (c.batch_size <= 0 || c.steps < 0 || !(c.learning_rate > 0)) {
    throw ConfigurationError("batch_size and learning_rate must be positive, steps non-negative");
  }
  return c;
}

std::string seed_list(std::span<const TrainingSample> batch) {
  std::ostringstream os;
  for (std::size_t b = 0; b < batch.size(); ++b) os << (b ? "," : "") << batch[b].seed;
  return os.str();
}

bool all_finite(const nn::Matrix& m) { return m.allFinite(); }

}  // namespace

TrainingConfig parse_training_config(const std::string& json_text, const std::filesystem::path& base_dir) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(json_text);
  } catch (const nlohmann::json::exception& e) {
    throw ConfigurationError(std::string("training config is not valid JSON: ") + e.what());
  }
  return config_from_json(j, base_dir);
}

TrainingConfig load_training_config(const std::filesystem::path& path) {
  return parse_training_config(read_file(path), std::filesystem::absolute(path).parent_path());
}

std::string training_config_json(const TrainingConfig& c) { return config_to_json(c).dump(2) + "\n"; }

std::string config_hash(const TrainingConfig& c) {
  Fnv1a h;
  h.update(config_to_json(c).dump());
  return to_hex(h.digest());
}

EditorConfig editor_config_for(const TrainingConfig& config, const BackendDims& dims) {
  EditorConfig e = config.editor;
  e.n_styles = dims.n_styles;
  e.style_dim = dims.style_dim;
  return e;
}

// --------------------------------------------------------------- sampling

std::vector<FeatureVector> feature_corpus(const Backbone& backbone, int samples, std::uint64_t seed) {
  if (samples <= 0) throw DomainError("corpus size must be positive");
  std::vector<FeatureVector> out(static_cast<std::size_t>(samples));
  std::exception_ptr error;
#pragma omp parallel for schedule(static)
  for (int i = 0; i < samples; ++i) {
    try {
      const auto& gen = *backbone.generator;
      const LatentCode w = gen.map(gen.sample_latent(derive_seed(seed, {static_cast<std::uint64_t>(i)})));
      out[static_cast<std::size_t>(i)] = compute_all_features(backbone.detector->detect(gen.synthesize(w)));
    } catch (...) {
#pragma omp critical
      if (!error) error = std::current_exception();
    }
  }
  if (error) std::rethrow_exception(error);
  return out;
}

TrainingSample make_sample(const Backbone& backbone, const FeatureStats& stats, std::uint64_t sample_seed) {
  TrainingSample s;
  s.seed = sample_seed;
  s.latent = backbone.generator->map(backbone.generator->sample_latent(sample_seed));
  Rng rng(derive_seed(sample_seed, {kChoiceStream}));
  s.feature = std::uniform_int_distribution<int>(0, static_cast<int>(kNumFeatures) - 1)(rng);
  s.target = std::normal_distribution<double>(0.0, 1.0)(rng);
  s.original = measure(backbone, stats, s.latent);
  return s;
}

std::vector<TrainingSample> sample_batch(const Backbone& backbone, const FeatureStats& stats, int batch_size,
                                         std::uint64_t seed, long long step) {
  if (batch_size <= 0) throw DomainError("batch size must be positive");
  std::vector<TrainingSample> batch(static_cast<std::size_t>(batch_size));
  std::exception_ptr error;
#pragma omp parallel for schedule(static)
  for (int b = 0; b < batch_size; ++b) {
    try {
      batch[static_cast<std::size_t>(b)] =
          make_sample(backbone, stats, derive_seed(seed, {static_cast<std::uint64_t>(step), static_cast<std::uint64_t>(b)}));
    } catch (...) {
#pragma omp critical
      if (!error) error = std::current_exception();
    }
  }
  if (error) std::rethrow_exception(error);
  return batch;
}

// ------------------------------------------------------------------ loss

BatchResult batch_loss(EditorNetwork& editor, const Backbone& backbone, const FeatureStats& stats,
                       const CorrelationMatrix& corr, const LossWeights& weights,
                       std::span<const TrainingSample> batch, bool accumulate_gradients) {
  const std::size_t n = batch.size();
  if (n == 0) throw DomainError("empty batch");
  std::vector<LatentCode> latents;
  std::vector<int> features;
  std::vector<double> current, target;
  latents.reserve(n);
  for (const auto& s : batch) {
    latents.push_back(s.latent);
    features.push_back(s.feature);
    current.push_back(s.original.normalized[static_cast<std::size_t>(s.feature)]);
    target.push_back(s.target);
  }

  EditorCache cache;
  const EditorOutputs out = editor.forward(latents, features, current, target, accumulate_gradients ? &cache : nullptr);

  std::vector<LossTerms> terms(n);
  std::vector<ManipulationVector> d_manip(n);
  std::vector<double> d_scale(n, 0.0);
  const double inv_batch = 1.0 / static_cast<double>(n);
  const auto& gen = *backbone.generator;
  const auto& det = *backbone.detector;
  std::exception_ptr error;

#pragma omp parallel for schedule(static)
  for (std::size_t b = 0; b < n; ++b) {
    try {
      const TrainingSample& s = batch[b];
      const double k = out.scale[b];
      const ManipulationVector& se = out.manipulation[b];
      const LatentCode edited = apply_manipulation(s.latent, k, se);

      TracedSynthesis traced;
      if (accumulate_gradients) {
        traced = gen.synthesize_traced(edited);
      } else {
        traced.output = gen.synthesize(edited);
      }
      const SynthesisOutput& eo = traced.output;
      const FeatureVector m_pred = normalize(compute_all_features(det.detect(eo)), stats);

      LossTerms& t = terms[b];
      t.pix = loss_pix(s.original.output.image, eo.image);
      t.feat = loss_feat(s.original.output.last_block_features, eo.last_block_features);
      t.sff = loss_sff(m_pred, s.feature, s.target, s.original.normalized, corr, weights.reg, weights.cor);
      t.total = weighted_total(weights, t.pix, t.feat, t.sff);

      if (accumulate_gradients) {
        SynthesisCotangent cot;
        if (weights.pix != 0.0) {
          const double c = inv_batch * weights.pix * 2.0 / static_cast<double>(eo.image.size());
          cot.image.resize(eo.image.size());
          for (std::size_t i = 0; i < eo.image.size(); ++i) {
            cot.image[i] = c * (eo.image.pixels[i] - s.original.output.image.pixels[i]);
          }
        }
        if (weights.feat != 0.0) {
          const auto& fe = eo.last_block_features;
          const auto& fo = s.original.output.last_block_features;
          const double c = inv_batch * weights.feat * 2.0 / static_cast<double>(fe.size());
          cot.last_block_features.resize(fe.size());
          for (std::size_t i = 0; i < fe.size(); ++i) cot.last_block_features[i] = c * (fe[i] - fo[i]);
        }
        const FeatureVector g =
            loss_sff_gradient(m_pred, s.feature, s.target, s.original.normalized, corr, weights.reg, weights.cor);
        FeatureVector d_raw{};
        for (std::size_t i = 0; i < kNumFeatures; ++i) d_raw[i] = inv_batch * weights.sff * g[i] / stats.std[i];
        std::array<double, kNumCoords> d_lm{};
        accumulate_feature_vjp(d_raw, d_lm);
        det.backward(eo, d_lm, cot);

        const LatentCode dw = gen.backward(*traced.trace, cot);
        ManipulationVector ds(se.n_styles(), se.style_dim());
        double dk = 0.0;
        const auto dwv = dw.values();
        const auto sv = se.values();
        auto dsv = ds.values();
        for (std::size_t i = 0; i < dwv.size(); ++i) {
          dk += dwv[i] * sv[i];
          dsv[i] = k * dwv[i];
        }
        d_manip[b] = std::move(ds);
        d_scale[b] = dk;
      }
    } catch (...) {
#pragma omp critical
      if (!error) error = std::current_exception();
    }
  }
  if (error) std::rethrow_exception(error);

  if (accumulate_gradients) editor.backward(cache, d_manip, d_scale);

  BatchResult r;
  r.loss = total_loss(terms, weights);
  for (std::size_t b = 0; b < n; ++b) {
    r.mean_abs_scale += std::abs(out.scale[b]);
    double sq = 0.0;
    for (double v : out.manipulation[b].values()) sq += v * v;
    r.mean_manipulation_norm += std::sqrt(sq);
  }
  r.mean_abs_scale *= inv_batch;
  r.mean_manipulation_norm *= inv_batch;
  return r;
}

// ------------------------------------------------------------ checkpoint

void save_checkpoint(const Checkpoint& c, const std::filesystem::path& path) {
  Archive editor = c.editor.to_archive();
  Archive a;
  a.kind = kCheckpointKind;
  a.meta["format_version"] = Checkpoint::kFormatVersion;
  a.meta["config"] = config_to_json(c.config);
  a.meta["config_hash"] = c.config_hash;
  a.meta["step"] = c.step;
  a.meta["backbone_checksum"] = to_hex(c.backbone_checksum);
  a.meta["references"] = {{"backend", c.config.backend.string()},
                          {"stats", c.config.stats.string()},
                          {"correlation", c.config.correlation.string()}};
  a.meta["editor"] = editor.meta;
  a.meta["optimizer_steps"] = c.optimizer_steps;
  for (auto& [name, t] : editor.tensors) a.tensors["editor/" + name] = std::move(t);

  const auto params = c.editor.parameters();
  if (!c.adam_m.empty()) {
    if (c.adam_m.size() != params.size() || c.adam_v.size() != params.size()) {
      throw DomainError("optimizer state does not match editor parameters");
    }
    for (std::size_t i = 0; i < params.size(); ++i) {
      const auto& m = c.adam_m[i];
      const auto& v = c.adam_v[i];
      a.tensors["adam.m/" + params[i]->name] = Tensor{static_cast<int>(m.rows()), static_cast<int>(m.cols()),
                                                      std::vector<double>(m.data(), m.data() + m.size())};
      a.tensors["adam.v/" + params[i]->name] = Tensor{static_cast<int>(v.rows()), static_cast<int>(v.cols()),
                                                      std::vector<double>(v.data(), v.data() + v.size())};
    }
  }
  write_archive(a, path);
}

Checkpoint load_checkpoint(const std::filesystem::path& path) {
  const Archive a = read_archive(path, kCheckpointKind);
  Checkpoint c;
  try {
    const int version = a.meta.at("format_version").get<int>();
    if (version != Checkpoint::kFormatVersion) {
      throw ConfigurationError("checkpoint format version " + std::to_string(version) + " is not supported");
    }
    c.config = config_from_json(a.meta.at("config"), {});
    c.config_hash = a.meta.at("config_hash").get<std::string>();
    c.step = a.meta.at("step").get<long long>();
    c.backbone_checksum = std::stoull(a.meta.at("backbone_checksum").get<std::string>(), nullptr, 16);
    c.optimizer_steps = a.meta.value("optimizer_steps", 0LL);

    Archive editor;
    editor.kind = "editor";
    editor.meta = a.meta.at("editor");
    const std::string prefix = "editor/";
    for (const auto& [name, t] : a.tensors) {
      if (name.rfind(prefix, 0) == 0) editor.tensors[name.substr(prefix.size())] = t;
    }
    c.editor = EditorNetwork::from_archive(editor);
  } catch (const nlohmann::json::exception& e) {
    throw ConfigurationError(std::string("checkpoint metadata incomplete: ") + e.what());
  }

  const auto params = c.editor.parameters();
  if (a.tensors.count("adam.m/" + params.front()->name)) {
    for (const auto* p : params) {
      const Tensor& m = a.tensor("adam.m/" + p->name);
      const Tensor& v = a.tensor("adam.v/" + p->name);
      if (m.rows != p->value.rows() || m.cols != p->value.cols() || v.rows != m.rows || v.cols != m.cols) {
        throw ConfigurationError("optimizer tensor shape mismatch for " + p->name);
      }
      c.adam_m.push_back(Eigen::Map<const nn::Matrix>(m.data.data(), m.rows, m.cols));
      c.adam_v.push_back(Eigen::Map<const nn::Matrix>(v.data.data(), v.rows, v.cols));
    }
  }
  return c;
}

Model load_model(const std::filesystem::path& checkpoint_path, const std::filesystem::path& backend_override) {
  Model m{load_checkpoint(checkpoint_path), {}, {}, {}};
  const TrainingConfig& cfg = m.checkpoint.config;
  m.backbone = make_backbone(load_backend_descriptor(backend_override.empty() ? cfg.backend : backend_override));
  m.stats = load_stats(cfg.stats);
  m.correlation = load_correlation(cfg.correlation);
  const std::uint64_t actual = m.backbone.checksum();
  if (actual != m.checkpoint.backbone_checksum) {
    throw ConfigurationError("backend checksum " + to_hex(actual) + " does not match checkpoint " +
                             to_hex(m.checkpoint.backbone_checksum));
  }
  const BackendDims dims = m.backbone.generator->dims();
  const EditorConfig& ec = m.checkpoint.editor.config();
  if (ec.n_styles != dims.n_styles || ec.style_dim != dims.style_dim) {
    throw ConfigurationError("checkpoint editor shape does not match the backend");
  }
  return m;
}

// --------------------------------------------------------------- trainer

std::string metrics_record_json(const StepRecord& r) {
  nlohmann::ordered_json j;
  j["step"] = r.step;
  j["total"] = r.result.loss.total;
  j["pix"] = r.result.loss.pix;
  j["feat"] = r.result.loss.feat;
  j["sff"] = r.result.loss.sff;
  j["mean_abs_k"] = r.result.mean_abs_scale;
  j["mean_norm_s"] = r.result.mean_manipulation_norm;
  j["seconds"] = r.seconds;
  j["unix_time"] = std::chrono::duration<double>(std::chrono::system_clock::now().time_since_epoch()).count();
  return j.dump();
}

Trainer::Trainer(TrainingConfig config, Backbone backbone, FeatureStats stats, CorrelationMatrix corr)
    : config_(std::move(config)), backbone_(std::move(backbone)), stats_(std::move(stats)), corr_(corr) {
  if (!backbone_.generator || !backbone_.detector) throw ConfigurationError("training needs a complete backbone");
  if (!backbone_.detector->ready()) throw ConfigurationError("landmark detector is not fitted");
  if (config_.batch_size <= 0) throw ConfigurationError("batch_size must be positive");
  backbone_checksum_ = backbone_.checksum();
  editor_ = std::make_unique<EditorNetwork>(editor_config_for(config_, backbone_.generator->dims()),
                                            derive_seed(config_.seed, {kEditorInitStream}));
  adam_ = std::make_unique<nn::Adam>(editor_->parameters(), nn::AdamOptions{.learning_rate = config_.learning_rate});
}

Trainer::Trainer(const Checkpoint& resume, Backbone backbone, FeatureStats stats, CorrelationMatrix corr)
    : Trainer(resume.config, std::move(backbone), std::move(stats), corr) {
  if (resume.config_hash != config_hash(config_)) throw ConfigurationError("checkpoint config hash mismatch");
  if (resume.backbone_checksum != backbone_checksum_) {
    throw ConfigurationError("checkpoint was trained against a different backbone");
  }
  if (!(resume.editor.config() == editor_->config())) throw ConfigurationError("checkpoint editor shape mismatch");
  *editor_ = resume.editor;
  adam_ = std::make_unique<nn::Adam>(editor_->parameters(), nn::AdamOptions{.learning_rate = config_.learning_rate});
  if (!resume.adam_m.empty()) adam_->restore(resume.optimizer_steps, resume.adam_m, resume.adam_v);
  step_ = resume.step;
}

StepRecord Trainer::step() {
  const auto start = std::chrono::steady_clock::now();
  const auto batch = sample_batch(backbone_, stats_, config_.batch_size, config_.seed, step_);
  adam_->zero_grad();
  StepRecord rec;
  rec.result = batch_loss(*editor_, backbone_, stats_, corr_, config_.weights, batch, true);
  bool finite = std::isfinite(rec.result.loss.total);
  for (const auto* p : editor_->parameters()) finite = finite && all_finite(p->grad);
  if (!finite) {
    throw TrainingAborted("non-finite loss or gradient at step " + std::to_string(step_) +
                          "; sample seeds: " + seed_list(batch));
  }
  adam_->step();
  ++step_;
  rec.step = step_;
  rec.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  return rec;
}

void Trainer::verify_backbone() const {
  const std::uint64_t now = backbone_.checksum();
  if (now != backbone_checksum_) {
    throw ContractViolation("backbone parameters changed during training (" + to_hex(backbone_checksum_) + " -> " +
                            to_hex(now) + ")");
  }
}

Checkpoint Trainer::checkpoint() const {
  Checkpoint c{*editor_, config_, config_hash(config_), step_, backbone_checksum_, adam_->steps(),
               adam_->first_moments(), adam_->second_moments()};
  c.editor.set_trained(step_ > 0);
  return c;
}

void Trainer::run(const std::filesystem::path& checkpoint_out, const std::filesystem::path& metrics_log,
                  const std::function<void(const StepRecord&)>& progress) {
  std::ofstream log;
  if (!metrics_log.empty()) {
    log.open(metrics_log, std::ios::app);
    if (!log) throw ConfigurationError("cannot open metrics log " + metrics_log.string());
  }
  verify_backbone();
  while (step_ < config_.steps) {
    const StepRecord rec = step();
    if (log && config_.log_every > 0 && (rec.step % config_.log_every == 0 || rec.step == config_.steps)) {
      log << metrics_record_json(rec) << '\n';
      log.flush();
    }
    if (progress) progress(rec);
    if (config_.checkpoint_every > 0 && rec.step % config_.checkpoint_every == 0 && rec.step != config_.steps &&
        !checkpoint_out.empty()) {
      verify_backbone();
      save_checkpoint(checkpoint(), checkpoint_out);
    }
  }
  verify_backbone();
  if (!checkpoint_out.empty()) save_checkpoint(checkpoint(), checkpoint_out);
}

}  // namespace facectl
