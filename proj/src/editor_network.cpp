// Copyright (c) 2026 The facectl Authors
// SPDX-License-Identifier: Apache-2.0

#include "facectl/editor_network.hpp"

#include <cmath>

#include "facectl/errors.hpp"
#include "facectl/io.hpp"

namespace facectl {

namespace {

constexpr std::uint64_t kInitStream = 0x656469;
constexpr char kArchiveKind[] = "editor";

nn::Matrix relu(const nn::Matrix& x) { return x.cwiseMax(0.0); }

nn::Matrix relu_backward(const nn::Matrix& pre, const nn::Matrix& dy) {
  return (pre.array() > 0.0).select(dy, 0.0);
}

nn::Matrix row_vector(std::span<const double> v) {
  nn::Matrix m(1, static_cast<Eigen::Index>(v.size()));
  for (std::size_t i = 0; i < v.size(); ++i) m(0, static_cast<Eigen::Index>(i)) = v[i];
  return m;
}

void check_feature_id(int id) {
  if (id < 0 || id >= static_cast<int>(kNumFeatures)) throw DomainError("feature id " + std::to_string(id) + " outside 0..22");
}

}  // namespace

EditorNetwork::EditorNetwork(EditorConfig config, std::uint64_t seed) : config_(config) {
  const int n = config.n_styles;
  const int d = config.style_dim;
  if (n <= 0 || d <= 0 || config.layers < 0 || config.heads <= 0 || config.ffn_multiplier <= 0 ||
      config.scale_hidden <= 0) {
    throw ConfigurationError("editor dimensions must be positive");
  }
  if (d % config.heads != 0) throw ConfigurationError("style_dim must be divisible by heads");

  Rng rng(derive_seed(seed, {kInitStream}));
  embedding_ = nn::Parameter("embedding", nn::gaussian(rng, kNumFeatures, d, 1.0));
  positional_ = nn::Parameter("positional", nn::gaussian(rng, n + 1, d, 0.1));
  for (int l = 0; l < config.layers; ++l) {
    blocks_.emplace_back("block" + std::to_string(l), d, config.heads, config.ffn_multiplier * d, rng);
  }
  final_norm_ = nn::LayerNorm("final_norm", d);
  output_ = nn::Linear("output", d, d, rng, config.output_init_std);
  const int h = config.scale_hidden;
  scale1_ = nn::Linear("scale1", 2 + d, h, rng, std::sqrt(2.0 / (2 + d)));
  scale2_ = nn::Linear("scale2", h, h, rng, std::sqrt(2.0 / h));
  scale3_ = nn::Linear("scale3", h, 1, rng, std::sqrt(1.0 / h));
}

FeatureEmbedding EditorNetwork::embed(int feature_id) const {
  check_feature_id(feature_id);
  const auto row = embedding_.value.row(feature_id);
  return {std::vector<double>(row.data(), row.data() + row.size())};
}

void EditorNetwork::check_latent(const LatentCode& w) const {
  if (w.n_styles() != config_.n_styles || w.style_dim() != config_.style_dim) {
    throw DomainError("latent shape " + std::to_string(w.n_styles()) + "x" + std::to_string(w.style_dim()) +
                      " does not match editor " + std::to_string(config_.n_styles) + "x" +
                      std::to_string(config_.style_dim));
  }
}

nn::Matrix EditorNetwork::tokens(std::span<const LatentCode> latents, std::span<const nn::Matrix> embeddings) const {
  const int n = config_.n_styles;
  const int d = config_.style_dim;
  const int t = n + 1;
  nn::Matrix x(static_cast<Eigen::Index>(latents.size()) * t, d);
  for (std::size_t b = 0; b < latents.size(); ++b) {
    const auto base = static_cast<Eigen::Index>(b) * t;
    for (int r = 0; r < n; ++r) {
      const auto row = latents[b].row(r);
      for (int c = 0; c < d; ++c) x(base + r, c) = row[static_cast<std::size_t>(c)];
    }
    x.row(base + n) = embeddings[b].row(0);
    x.middleRows(base, t) += positional_.value;
  }
  return x;
}

nn::Matrix EditorNetwork::run_encoder(const nn::Matrix& x, int batch, EditorCache* cache) const {
  const int t = config_.n_styles + 1;
  nn::Matrix h = x;
  if (cache) {
    cache->batch = batch;
    cache->blocks.resize(blocks_.size());
  }
  for (std::size_t l = 0; l < blocks_.size(); ++l) {
    h = blocks_[l].forward(h, t, cache ? &cache->blocks[l] : nullptr);
  }
  return final_norm_.forward(h, cache ? &cache->final_norm : nullptr);
}

nn::Matrix EditorNetwork::scale_forward(const nn::Matrix& input, EditorCache* cache) const {
  nn::Matrix h1_pre = scale1_.forward(input);
  nn::Matrix h1 = relu(h1_pre);
  nn::Matrix h2_pre = scale2_.forward(h1);
  nn::Matrix h2 = relu(h2_pre);
  nn::Matrix k = scale3_.forward(h2);
  if (cache) {
    cache->scale_input = input;
    cache->scale_h1_pre = std::move(h1_pre);
    cache->scale_h1 = std::move(h1);
    cache->scale_h2_pre = std::move(h2_pre);
    cache->scale_h2 = std::move(h2);
  }
  return k;
}

nn::Matrix EditorNetwork::encode(const LatentCode& w, const FeatureEmbedding& e) const {
  check_latent(w);
  if (static_cast<int>(e.vector.size()) != config_.style_dim) throw DomainError("embedding dimension mismatch");
  const nn::Matrix emb = row_vector(e.vector);
  return run_encoder(tokens(std::span(&w, 1), std::span(&emb, 1)), 1, nullptr);
}

ManipulationVector EditorNetwork::project(const nn::Matrix& encoded) const {
  const int n = config_.n_styles;
  const int d = config_.style_dim;
  if (encoded.rows() != n + 1 || encoded.cols() != d) throw DomainError("encoded sequence shape mismatch");
  const nn::Matrix out = output_.forward(encoded.topRows(n));
  return ManipulationVector(n, d, std::vector<double>(out.data(), out.data() + out.size()));
}

ManipulationVector EditorNetwork::predict_manipulation(const LatentCode& w, const FeatureEmbedding& e) const {
  return project(encode(w, e));
}

double EditorNetwork::predict_scale(double m_current, double m_target, const FeatureEmbedding& e) const {
  const int d = config_.style_dim;
  if (static_cast<int>(e.vector.size()) != d) throw DomainError("embedding dimension mismatch");
  nn::Matrix input(1, 2 + d);
  input(0, 0) = m_current;
  input(0, 1) = m_target;
  for (int c = 0; c < d; ++c) input(0, 2 + c) = e.vector[static_cast<std::size_t>(c)];
  return scale_forward(input, nullptr)(0, 0);
}

EditorOutputs EditorNetwork::forward(std::span<const LatentCode> latents, std::span<const int> features,
                                     std::span<const double> current, std::span<const double> target,
                                     EditorCache* cache) const {
  const auto batch = latents.size();
  if (features.size() != batch || current.size() != batch || target.size() != batch) {
    throw DomainError("editor batch fields differ in length");
  }
  const int n = config_.n_styles;
  const int d = config_.style_dim;
  const int t = n + 1;

  std::vector<nn::Matrix> embeddings;
  embeddings.reserve(batch);
  nn::Matrix scale_input(static_cast<Eigen::Index>(batch), 2 + d);
  for (std::size_t b = 0; b < batch; ++b) {
    check_latent(latents[b]);
    check_feature_id(features[b]);
    embeddings.push_back(embedding_.value.row(features[b]));
    const auto r = static_cast<Eigen::Index>(b);
    scale_input(r, 0) = current[b];
    scale_input(r, 1) = target[b];
    scale_input.block(r, 2, 1, d) = embeddings.back();
  }

  const nn::Matrix encoded = run_encoder(tokens(latents, embeddings), static_cast<int>(batch), cache);
  nn::Matrix kept(static_cast<Eigen::Index>(batch) * n, d);
  for (std::size_t b = 0; b < batch; ++b) {
    kept.middleRows(static_cast<Eigen::Index>(b) * n, n) = encoded.middleRows(static_cast<Eigen::Index>(b) * t, n);
  }
  const nn::Matrix projected = output_.forward(kept);
  const nn::Matrix k = scale_forward(scale_input, cache);

  EditorOutputs out;
  out.manipulation.reserve(batch);
  for (std::size_t b = 0; b < batch; ++b) {
    const double* p = projected.data() + static_cast<std::size_t>(b) * n * d;
    out.manipulation.emplace_back(n, d, std::vector<double>(p, p + static_cast<std::size_t>(n) * d));
    out.scale.push_back(k(static_cast<Eigen::Index>(b), 0));
  }
  if (cache) {
    cache->features.assign(features.begin(), features.end());
    cache->encoded = encoded;
    cache->kept = std::move(kept);
  }
  return out;
}

void EditorNetwork::backward(const EditorCache& cache, std::span<const ManipulationVector> d_manipulation,
                             std::span<const double> d_scale) {
  const int n = config_.n_styles;
  const int d = config_.style_dim;
  const int t = n + 1;
  const int batch = cache.batch;
  if (static_cast<int>(d_manipulation.size()) != batch || static_cast<int>(d_scale.size()) != batch) {
    throw DomainError("editor gradient batch mismatch");
  }

  nn::Matrix d_projected(static_cast<Eigen::Index>(batch) * n, d);
  for (int b = 0; b < batch; ++b) {
    const auto v = d_manipulation[static_cast<std::size_t>(b)].values();
    std::copy(v.begin(), v.end(), d_projected.data() + static_cast<std::size_t>(b) * n * d);
  }
  const nn::Matrix d_kept = output_.backward(cache.kept, d_projected);
  nn::Matrix d_h = nn::Matrix::Zero(static_cast<Eigen::Index>(batch) * t, d);
  for (int b = 0; b < batch; ++b) {
    d_h.middleRows(static_cast<Eigen::Index>(b) * t, n) = d_kept.middleRows(static_cast<Eigen::Index>(b) * n, n);
  }
  d_h = final_norm_.backward(cache.final_norm, d_h);
  for (std::size_t l = blocks_.size(); l-- > 0;) d_h = blocks_[l].backward(cache.blocks[l], t, d_h);

  for (int b = 0; b < batch; ++b) {
    const auto base = static_cast<Eigen::Index>(b) * t;
    positional_.grad += d_h.middleRows(base, t);
    embedding_.grad.row(cache.features[static_cast<std::size_t>(b)]) += d_h.row(base + n);
  }

  nn::Matrix dk(batch, 1);
  for (int b = 0; b < batch; ++b) dk(b, 0) = d_scale[static_cast<std::size_t>(b)];
  const nn::Matrix d_h2 = scale3_.backward(cache.scale_h2, dk);
  const nn::Matrix d_h1 = scale2_.backward(cache.scale_h1, relu_backward(cache.scale_h2_pre, d_h2));
  const nn::Matrix d_in = scale1_.backward(cache.scale_input, relu_backward(cache.scale_h1_pre, d_h1));
  for (int b = 0; b < batch; ++b) {
    embedding_.grad.row(cache.features[static_cast<std::size_t>(b)]) += d_in.block(b, 2, 1, d);
  }
}

std::vector<nn::Parameter*> EditorNetwork::parameters() {
  std::vector<nn::Parameter*> out{&embedding_, &positional_};
  for (auto& b : blocks_) b.collect(out);
  final_norm_.collect(out);
  output_.collect(out);
  scale1_.collect(out);
  scale2_.collect(out);
  scale3_.collect(out);
  return out;
}

std::vector<const nn::Parameter*> EditorNetwork::parameters() const {
  auto mut = const_cast<EditorNetwork*>(this)->parameters();
  return {mut.begin(), mut.end()};
}

nn::Parameter& EditorNetwork::parameter(const std::string& name) {
  for (auto* p : parameters()) {
    if (p->name == name) return *p;
  }
  throw DomainError("unknown editor parameter '" + name + "'");
}

std::size_t EditorNetwork::parameter_count() const {
  std::size_t total = 0;
  for (const auto* p : parameters()) total += static_cast<std::size_t>(p->value.size());
  return total;
}

std::uint64_t EditorNetwork::parameter_checksum() const {
  Fnv1a h;
  for (const auto* p : parameters()) {
    h.update(p->name);
    h.update(std::span<const double>(p->value.data(), static_cast<std::size_t>(p->value.size())));
  }
  return h.digest();
}

Archive EditorNetwork::to_archive() const {
  Archive a;
  a.kind = kArchiveKind;
  a.meta = {{"n_styles", config_.n_styles},   {"style_dim", config_.style_dim},
            {"layers", config_.layers},       {"heads", config_.heads},
            {"ffn_multiplier", config_.ffn_multiplier}, {"scale_hidden", config_.scale_hidden},
            {"output_init_std", config_.output_init_std}, {"trained", trained_}};
  for (const auto* p : parameters()) {
    a.tensors[p->name] = Tensor{static_cast<int>(p->value.rows()), static_cast<int>(p->value.cols()),
                                std::vector<double>(p->value.data(), p->value.data() + p->value.size())};
  }
  return a;
}

EditorNetwork EditorNetwork::from_archive(const Archive& a) {
  EditorConfig c;
  try {
    c.n_styles = a.meta.at("n_styles").get<int>();
    c.style_dim = a.meta.at("style_dim").get<int>();
    c.layers = a.meta.at("layers").get<int>();
    c.heads = a.meta.at("heads").get<int>();
    c.ffn_multiplier = a.meta.at("ffn_multiplier").get<int>();
    c.scale_hidden = a.meta.at("scale_hidden").get<int>();
    c.output_init_std = a.meta.value("output_init_std", c.output_init_std);
  } catch (const nlohmann::json::exception& e) {
    throw ConfigurationError(std::string("editor metadata incomplete: ") + e.what());
  }
  EditorNetwork net(c, 0);
  for (auto* p : net.parameters()) {
    const Tensor& t = a.tensor(p->name);
    if (t.rows != p->value.rows() || t.cols != p->value.cols()) {
      throw ConfigurationError("editor tensor '" + p->name + "' has shape " + std::to_string(t.rows) + "x" +
                               std::to_string(t.cols));
    }
    std::copy(t.data.begin(), t.data.end(), p->value.data());
  }
  net.trained_ = a.meta.value("trained", false);
  return net;
}

// ---------------------------------------------------------------- editing

Measurement measure(const Backbone& backbone, const FeatureStats& stats, const LatentCode& w) {
  Measurement m;
  m.output = backbone.generator->synthesize(w);
  m.normalized = normalize(compute_all_features(backbone.detector->detect(m.output)), stats);
  return m;
}

EditResult edit(const EditorNetwork& editor, const Backbone& backbone, const FeatureStats& stats, const LatentCode& w,
                const Measurement& current, int feature_id, double target) {
  if (!editor.trained()) throw NotReadyError("editor parameters are untrained");
  check_feature_id(feature_id);
  if (!std::isfinite(target)) throw DomainError("edit target must be finite");

  EditResult r;
  r.feature = feature_id;
  r.target = target;
  const FeatureEmbedding e = editor.embed(feature_id);
  r.manipulation = editor.predict_manipulation(w, e);
  r.scale = editor.predict_scale(current.normalized[static_cast<std::size_t>(feature_id)], target, e);
  r.original_latent = w;
  r.edited_latent = apply_manipulation(w, r.scale, r.manipulation);
  r.before = current;
  r.after = measure(backbone, stats, r.edited_latent);
  return r;
}

EditResult edit(const EditorNetwork& editor, const Backbone& backbone, const FeatureStats& stats, const LatentCode& w,
                int feature_id, double target) {
  if (!editor.trained()) throw NotReadyError("editor parameters are untrained");
  return edit(editor, backbone, stats, w, measure(backbone, stats, w), feature_id, target);
}

IterativeEditResult iterative_edit(const EditorNetwork& editor, const Backbone& backbone, const FeatureStats& stats,
                                   const LatentCode& w, int feature_id, double target, int rounds) {
  if (rounds < 1) throw DomainError("iterative edit needs at least one round");
  IterativeEditResult out;
  out.rounds.reserve(static_cast<std::size_t>(rounds));
  out.rounds.push_back(edit(editor, backbone, stats, w, feature_id, target));
  for (int i = 1; i < rounds; ++i) {
    const EditResult& prev = out.rounds.back();
    out.rounds.push_back(edit(editor, backbone, stats, prev.edited_latent, prev.after, feature_id, target));
  }
  return out;
}

}  // namespace facectl
