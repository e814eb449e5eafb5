// Copyright (c) 2026 The facectl Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <atomic>
#include <cstdint>
#include <filesystem>
#include <map>
#include <memory>
#include <mutex>
#include <nlohmann/json.hpp>
#include <optional>
#include <shared_mutex>
#include <string>
#include <thread>
#include <vector>

#include "facectl/editor_network.hpp"
#include "facectl/training.hpp"

namespace facectl {

struct FeatureViewEntry {
  int id = 0;
  std::string name;
  double normalized = 0.0;
  double slider = 0.0;  // (normalized - lo) / (hi - lo), clamped to [0, 1]
  double slider_lo = 0.0;
  double slider_hi = 0.0;

  bool operator==(const FeatureViewEntry&) const = default;
};

using FeatureView = std::vector<FeatureViewEntry>;

FeatureView make_feature_view(const FeatureVector& normalized, const FeatureStats& stats);
nlohmann::json feature_view_json(const FeatureView& view);

enum class TargetUnit { kSlider, kNormalized };
/// Maps a slider position in [0, 1] to normalized units; throws DomainError outside [0, 1].
double slider_to_normalized(double slider, int feature_id, const FeatureStats& stats);

enum class ImageKind { kCurrent, kOriginal, kDiff };

/// HTTP-level error with a machine-readable code.
class ServiceError : public std::runtime_error {
 public:
  ServiceError(int status, std::string code, const std::string& message)
      : std::runtime_error(message), status_(status), code_(std::move(code)) {}
  int status() const { return status_; }
  const std::string& code() const { return code_; }

 private:
  int status_;
  std::string code_;
};

struct ServiceOptions {
  /// When set, every session is written here after each change and reloaded at start.
  std::filesystem::path snapshot_dir;
  std::size_t max_sessions = 1024;
};

struct HttpRequest {
  std::string method;
  std::string path;
  std::map<std::string, std::string> query;
  std::string body;
};

struct HttpResponse {
  int status = 200;
  std::string content_type = "application/json";
  std::string body;
  std::map<std::string, std::string> headers;
};

/// Editing sessions over a loaded model. Requests on different sessions run
/// concurrently; requests on one session are serialized.
class EditService {
 public:
  explicit EditService(Model model, ServiceOptions options = {});

  nlohmann::json create_session(const nlohmann::json& request);
  nlohmann::json features(const std::string& session_id) const;
  nlohmann::json apply_edit(const std::string& session_id, const nlohmann::json& request);
  nlohmann::json undo(const std::string& session_id);
  Image image(const std::string& session_id, ImageKind kind) const;
  nlohmann::json catalog() const;

  /// Transport-independent routing of the HTTP API.
  HttpResponse handle(const HttpRequest& request);

  std::size_t session_count() const;
  const Model& model() const { return model_; }

 private:
  struct Session {
    std::string id;
    std::vector<LatentCode> history;
    Measurement original;
    Measurement current;
    mutable std::mutex mutex;
  };

  std::shared_ptr<Session> find(const std::string& id) const;
  nlohmann::json summary(const Session& s) const;
  void snapshot(const Session& s) const;
  void load_snapshots();
  std::string next_id();
  LatentCode parse_latent(const nlohmann::json& j) const;

  Model model_;
  ServiceOptions options_;
  mutable std::shared_mutex sessions_mutex_;
  std::map<std::string, std::shared_ptr<Session>> sessions_;
  std::atomic<std::uint64_t> counter_{0};
};

/// Content-addressed handle of an image (hex FNV-1a of its pixels).
std::string image_handle(const Image& image);

/// Serves EditService::handle over HTTP on a background thread.
class HttpServer {
 public:
  HttpServer(EditService& service, std::string host, int port);
  ~HttpServer();
  HttpServer(const HttpServer&) = delete;
  HttpServer& operator=(const HttpServer&) = delete;

  /// Bound port (useful with port 0).
  int port() const { return port_; }
  /// Blocks until stop() is called from another thread or a signal handler.
  void wait();
  void stop();

 private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
  int port_ = 0;
  std::thread thread_;
};

}  // namespace facectl
