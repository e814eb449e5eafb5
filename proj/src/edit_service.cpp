// Copyright (c) 2026 The facectl Authors
// SPDX-License-Identifier: Apache-2.0

#include "facectl/edit_service.hpp"

#include <httplib.h>

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <regex>

#include "facectl/errors.hpp"
#include "facectl/io.hpp"
#include "facectl/png.hpp"

namespace facectl {

namespace {

constexpr char kSnapshotFormat[] = "facectl-session";

nlohmann::json latent_json(const StyleMatrix& m) {
  nlohmann::json rows = nlohmann::json::array();
  for (int r = 0; r < m.n_styles(); ++r) {
    const auto row = m.row(r);
    rows.push_back(std::vector<double>(row.begin(), row.end()));
  }
  return rows;
}

nlohmann::json error_body(const std::string& code, const std::string& message) {
  return {{"error", {{"code", code}, {"message", message}}}};
}

ImageKind parse_image_kind(const std::string& s) {
  if (s.empty() || s == "current") return ImageKind::kCurrent;
  if (s == "original") return ImageKind::kOriginal;
  if (s == "diff") return ImageKind::kDiff;
  throw ServiceError(400, "bad_image_kind", "image kind must be current, original or diff");
}

nlohmann::json parse_body(const std::string& body) {
  if (body.empty()) return nlohmann::json::object();
  try {
    return nlohmann::json::parse(body);
  } catch (const nlohmann::json::exception& e) {
    throw ServiceError(400, "bad_json", std::string("request body is not valid JSON: ") + e.what());
  }
}

int resolve_feature(const nlohmann::json& f) {
  if (f.is_number_integer()) {
    const int id = f.get<int>();
    if (id < 0 || id >= static_cast<int>(kNumFeatures)) {
      throw ServiceError(400, "unknown_feature", "feature id " + std::to_string(id) + " outside 0..22");
    }
    return id;
  }
  if (f.is_string()) {
    const auto id = find_feature(f.get<std::string>());
    if (!id) throw ServiceError(400, "unknown_feature", "no feature named '" + f.get<std::string>() + "'");
    return *id;
  }
  throw ServiceError(400, "bad_request", "'feature' must be a feature name or id");
}

}  // namespace

// ---------------------------------------------------------- feature view

FeatureView make_feature_view(const FeatureVector& normalized, const FeatureStats& stats) {
  FeatureView view;
  view.reserve(kNumFeatures);
  for (std::size_t i = 0; i < kNumFeatures; ++i) {
    FeatureViewEntry e;
    e.id = static_cast<int>(i);
    e.name = feature_definition(e.id).name;
    e.normalized = normalized[i];
    e.slider_lo = stats.slider_lo[i];
    e.slider_hi = stats.slider_hi[i];
    const double span = e.slider_hi - e.slider_lo;
    e.slider = span > 0 ? std::clamp((e.normalized - e.slider_lo) / span, 0.0, 1.0) : 0.5;
    view.push_back(std::move(e));
  }
  return view;
}

nlohmann::json feature_view_json(const FeatureView& view) {
  nlohmann::json out = nlohmann::json::array();
  for (const auto& e : view) {
    out.push_back({{"id", e.id},
                   {"name", e.name},
                   {"normalized", e.normalized},
                   {"slider", e.slider},
                   {"slider_lo", e.slider_lo},
                   {"slider_hi", e.slider_hi}});
  }
  return out;
}

double slider_to_normalized(double slider, int feature_id, const FeatureStats& stats) {
  if (!(slider >= 0.0 && slider <= 1.0)) throw DomainError("slider value must lie in [0, 1]");
  const auto i = static_cast<std::size_t>(feature_id);
  return stats.slider_lo[i] + slider * (stats.slider_hi[i] - stats.slider_lo[i]);
}

std::string image_handle(const Image& image) {
  Fnv1a h;
  const std::int32_t dims[2] = {image.height, image.width};
  h.update(dims, sizeof dims);
  h.update(image.pixels);
  return to_hex(h.digest());
}

// --------------------------------------------------------------- service

EditService::EditService(Model model, ServiceOptions options) : model_(std::move(model)), options_(std::move(options)) {
  if (!options_.snapshot_dir.empty()) {
    std::filesystem::create_directories(options_.snapshot_dir);
    load_snapshots();
  }
}

std::string EditService::next_id() {
  char buf[32];
  std::snprintf(buf, sizeof buf, "s%06llu", static_cast<unsigned long long>(++counter_));
  return buf;
}

std::shared_ptr<EditService::Session> EditService::find(const std::string& id) const {
  std::shared_lock lock(sessions_mutex_);
  const auto it = sessions_.find(id);
  if (it == sessions_.end()) throw ServiceError(404, "unknown_session", "no session '" + id + "'");
  return it->second;
}

std::size_t EditService::session_count() const {
  std::shared_lock lock(sessions_mutex_);
  return sessions_.size();
}

LatentCode EditService::parse_latent(const nlohmann::json& j) const {
  const BackendDims dims = model_.backbone.generator->dims();
  std::vector<double> values;
  try {
    if (!j.is_array()) throw ServiceError(400, "bad_latent", "'latent' must be an array");
    for (const auto& row : j) {
      if (row.is_array()) {
        if (static_cast<int>(row.size()) != dims.style_dim) {
          throw ServiceError(400, "bad_latent", "latent rows must have " + std::to_string(dims.style_dim) + " values");
        }
        for (const auto& v : row) values.push_back(v.get<double>());
      } else {
        values.push_back(row.get<double>());
      }
    }
  } catch (const nlohmann::json::exception& e) {
    throw ServiceError(400, "bad_latent", std::string("latent values must be numbers: ") + e.what());
  }
  if (values.size() != static_cast<std::size_t>(dims.n_styles) * dims.style_dim) {
    throw ServiceError(400, "bad_latent",
                       "latent must hold " + std::to_string(dims.n_styles) + "x" + std::to_string(dims.style_dim) +
                           " values, got " + std::to_string(values.size()));
  }
  try {
    return LatentCode(dims.n_styles, dims.style_dim, std::move(values));
  } catch (const DomainError& e) {
    throw ServiceError(400, "bad_latent", e.what());
  }
}

nlohmann::json EditService::summary(const Session& s) const {
  const Image& img = s.current.output.image;
  return {{"session", s.id},
          {"history_depth", s.history.size()},
          {"image",
           {{"handle", image_handle(img)},
            {"height", img.height},
            {"width", img.width},
            {"url", "/sessions/" + s.id + "/image?kind=current"}}},
          {"features", feature_view_json(make_feature_view(s.current.normalized, model_.stats))}};
}

nlohmann::json EditService::create_session(const nlohmann::json& request) {
  const bool has_seed = request.contains("seed");
  const bool has_latent = request.contains("latent");
  if (has_seed == has_latent) throw ServiceError(400, "bad_request", "give exactly one of 'seed' or 'latent'");

  LatentCode w;
  if (has_seed) {
    if (!request["seed"].is_number_unsigned()) {
      throw ServiceError(400, "bad_request", "'seed' must be a non-negative integer");
    }
    const auto& gen = *model_.backbone.generator;
    w = gen.map(gen.sample_latent(request["seed"].get<std::uint64_t>()));
  } else {
    w = parse_latent(request["latent"]);
  }

  auto session = std::make_shared<Session>();
  session->original = measure(model_.backbone, model_.stats, w);
  session->current = session->original;
  session->history.push_back(std::move(w));
  {
    std::unique_lock lock(sessions_mutex_);
    if (sessions_.size() >= options_.max_sessions) {
      throw ServiceError(429, "too_many_sessions", "session limit reached");
    }
    session->id = next_id();
    sessions_[session->id] = session;
  }
  std::lock_guard guard(session->mutex);
  snapshot(*session);
  nlohmann::json out = summary(*session);
  out["latent"] = latent_json(session->history.front());
  return out;
}

nlohmann::json EditService::features(const std::string& session_id) const {
  const auto s = find(session_id);
  std::lock_guard guard(s->mutex);
  return summary(*s);
}

nlohmann::json EditService::apply_edit(const std::string& session_id, const nlohmann::json& request) {
  const auto s = find(session_id);
  if (!request.contains("feature")) throw ServiceError(400, "bad_request", "'feature' is required");
  if (!request.contains("target") || !request["target"].is_number()) {
    throw ServiceError(400, "bad_request", "'target' must be a number");
  }
  const int j = resolve_feature(request["feature"]);
  const std::string unit = request.value("unit", std::string("normalized"));
  const double requested = request["target"].get<double>();
  if (!std::isfinite(requested)) throw ServiceError(400, "bad_request", "'target' must be finite");
  double target = requested;
  if (unit == "slider") {
    if (requested < 0.0 || requested > 1.0) throw ServiceError(400, "bad_target", "slider targets must lie in [0, 1]");
    target = slider_to_normalized(requested, j, model_.stats);
  } else if (unit != "normalized") {
    throw ServiceError(400, "bad_unit", "unit must be 'slider' or 'normalized'");
  }

  std::lock_guard guard(s->mutex);
  EditResult r = edit(model_.checkpoint.editor, model_.backbone, model_.stats, s->history.back(), s->current, j, target);
  const auto sj = static_cast<std::size_t>(j);
  s->history.push_back(r.edited_latent);
  s->current = r.after;
  snapshot(*s);

  nlohmann::json out = summary(*s);
  out["feature"] = {{"id", j}, {"name", feature_definition(j).name}};
  out["unit"] = unit;
  out["requested"] = requested;
  out["target_normalized"] = target;
  out["measured_before"] = r.before.normalized[sj];
  out["measured_after"] = r.after.normalized[sj];
  out["delta"] = r.after.normalized[sj] - target;
  out["k"] = r.scale;
  out["s_e"] = latent_json(r.manipulation);
  out["w"] = latent_json(r.original_latent);
  out["w_edit"] = latent_json(r.edited_latent);
  return out;
}

nlohmann::json EditService::undo(const std::string& session_id) {
  const auto s = find(session_id);
  std::lock_guard guard(s->mutex);
  if (s->history.size() < 2) throw ServiceError(409, "nothing_to_undo", "session has no edits to undo");
  s->history.pop_back();
  s->current = measure(model_.backbone, model_.stats, s->history.back());
  snapshot(*s);
  return summary(*s);
}

Image EditService::image(const std::string& session_id, ImageKind kind) const {
  const auto s = find(session_id);
  std::lock_guard guard(s->mutex);
  switch (kind) {
    case ImageKind::kCurrent:
      return s->current.output.image;
    case ImageKind::kOriginal:
      return s->original.output.image;
    case ImageKind::kDiff: {
      Image d = s->current.output.image;
      const Image& o = s->original.output.image;
      for (std::size_t i = 0; i < d.size(); ++i) d.pixels[i] = std::abs(d.pixels[i] - o.pixels[i]);
      return d;
    }
  }
  throw ServiceError(400, "bad_image_kind", "unknown image kind");
}

nlohmann::json EditService::catalog() const {
  const BackendDims dims = model_.backbone.generator->dims();
  nlohmann::json features = nlohmann::json::array();
  for (const auto& f : feature_catalog()) {
    const auto i = static_cast<std::size_t>(f.id);
    features.push_back({{"id", f.id},
                        {"name", f.name},
                        {"category", std::string(to_string(f.category))},
                        {"formula", f.formula},
                        {"slider_lo", model_.stats.slider_lo[i]},
                        {"slider_hi", model_.stats.slider_hi[i]}});
  }
  return {{"features", features},
          {"units", {"slider", "normalized"}},
          {"image_kinds", {"current", "original", "diff"}},
          {"backend",
           {{"kind", model_.backbone.generator->descriptor().kind},
            {"n_styles", dims.n_styles},
            {"style_dim", dims.style_dim},
            {"height", dims.height},
            {"width", dims.width}}},
          {"checkpoint", {{"config_hash", model_.checkpoint.config_hash}, {"step", model_.checkpoint.step}}}};
}

void EditService::snapshot(const Session& s) const {
  if (options_.snapshot_dir.empty()) return;
  nlohmann::json j;
  j["format"] = kSnapshotFormat;
  j["version"] = 1;
  j["id"] = s.id;
  j["history"] = nlohmann::json::array();
  for (const auto& w : s.history) j["history"].push_back(latent_json(w));
  write_file_atomic(options_.snapshot_dir / (s.id + ".json"), j.dump() + "\n");
}

void EditService::load_snapshots() {
  std::uint64_t max_counter = 0;
  for (const auto& entry : std::filesystem::directory_iterator(options_.snapshot_dir)) {
    if (entry.path().extension() != ".json") continue;
    nlohmann::json j;
    try {
      j = nlohmann::json::parse(read_file(entry.path()));
    } catch (const nlohmann::json::exception& e) {
      throw ConfigurationError("corrupt session snapshot " + entry.path().string() + ": " + e.what());
    }
    if (j.value("format", std::string()) != kSnapshotFormat) continue;
    auto session = std::make_shared<Session>();
    session->id = j.at("id").get<std::string>();
    for (const auto& w : j.at("history")) session->history.push_back(parse_latent(w));
    if (session->history.empty()) throw ConfigurationError("session snapshot without history: " + session->id);
    session->original = measure(model_.backbone, model_.stats, session->history.front());
    session->current = measure(model_.backbone, model_.stats, session->history.back());
    if (session->id.size() > 1 && session->id[0] == 's') {
      max_counter = std::max<std::uint64_t>(max_counter, std::stoull(session->id.substr(1)));
    }
    sessions_[session->id] = std::move(session);
  }
  counter_ = max_counter;
}

HttpResponse EditService::handle(const HttpRequest& req) {
  static const std::regex session_route(R"(^/sessions/([A-Za-z0-9_-]+)/(features|edits|image|undo)$)");
  HttpResponse res;
  auto json_response = [&](const nlohmann::json& j, int status = 200) {
    res.status = status;
    res.content_type = "application/json";
    res.body = j.dump();
  };
  auto method_not_allowed = [&] { throw ServiceError(405, "method_not_allowed", req.method + " not allowed on " + req.path); };
  try {
    std::smatch m;
    if (req.path == "/catalog") {
      if (req.method != "GET") method_not_allowed();
      json_response(catalog());
    } else if (req.path == "/sessions") {
      if (req.method != "POST") method_not_allowed();
      json_response(create_session(parse_body(req.body)), 201);
    } else if (std::regex_match(req.path, m, session_route)) {
      const std::string id = m[1];
      const std::string action = m[2];
      if (action == "features") {
        if (req.method != "GET") method_not_allowed();
        json_response(features(id));
      } else if (action == "edits") {
        if (req.method != "POST") method_not_allowed();
        json_response(apply_edit(id, parse_body(req.body)));
      } else if (action == "undo") {
        if (req.method != "POST") method_not_allowed();
        json_response(undo(id));
      } else {
        if (req.method != "GET") method_not_allowed();
        const auto it = req.query.find("kind");
        const Image img = image(id, parse_image_kind(it == req.query.end() ? "" : it->second));
        res.status = 200;
        res.content_type = "image/png";
        res.body = encode_png(img);
        res.headers["ETag"] = "\"" + image_handle(img) + "\"";
      }
    } else {
      throw ServiceError(404, "not_found", "no route for " + req.path);
    }
  } catch (const ServiceError& e) {
    json_response(error_body(e.code(), e.what()), e.status());
  } catch (const NotReadyError& e) {
    json_response(error_body("editor_not_ready", e.what()), 503);
  } catch (const DomainError& e) {
    json_response(error_body("invalid_argument", e.what()), 400);
  } catch (const std::exception& e) {
    json_response(error_body("internal_error", e.what()), 500);
  }
  return res;
}

// ------------------------------------------------------------ transport

struct HttpServer::Impl {
  httplib::Server server;
};

HttpServer::HttpServer(EditService& service, std::string host, int port) : impl_(std::make_unique<Impl>()) {
  auto forward = [&service](const httplib::Request& req, httplib::Response& res) {
    HttpRequest r{req.method, req.path, {}, req.body};
    for (const auto& [k, v] : req.params) r.query.emplace(k, v);
    const HttpResponse out = service.handle(r);
    res.status = out.status;
    for (const auto& [k, v] : out.headers) res.set_header(k, v);
    res.set_header("Access-Control-Allow-Origin", "*");
    res.set_content(out.body, out.content_type);
  };
  impl_->server.Get(".*", forward);
  impl_->server.Post(".*", forward);
  impl_->server.Options(".*", [](const httplib::Request&, httplib::Response& res) {
    res.status = 204;
    res.set_header("Access-Control-Allow-Origin", "*");
    res.set_header("Access-Control-Allow-Methods", "GET, POST, OPTIONS");
    res.set_header("Access-Control-Allow-Headers", "Content-Type");
  });
  if (port == 0) {
    port_ = impl_->server.bind_to_any_port(host);
  } else {
    port_ = impl_->server.bind_to_port(host, port) ? port : -1;
  }
  if (port_ <= 0) throw ConfigurationError("cannot listen on " + host + ":" + std::to_string(port));
  thread_ = std::thread([this] { impl_->server.listen_after_bind(); });
  impl_->server.wait_until_ready();
}

HttpServer::~HttpServer() {
  stop();
  if (thread_.joinable()) thread_.join();
}

void HttpServer::wait() {
  if (thread_.joinable()) thread_.join();
}

void HttpServer::stop() { impl_->server.stop(); }

}  // namespace facectl
