#pragma once

#include <chrono>
#include <functional>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "refnav/episode.hpp"
#include "refnav/json_io.hpp"
#include "refnav/metrics.hpp"

namespace httplib {
class Server;
}

namespace refnav {

struct ServerConfig {
  std::chrono::milliseconds idle_timeout{std::chrono::minutes(10)};
  EngineConfig engine;
};

/// Flat "key = value" file: idle_timeout_s, max_steps. '#' starts a comment.
ServerConfig parse_server_config(std::string_view text);

// Wire payloads.
ojson task_result_to_json(const TaskResult& r);
ojson summary_to_json(const MetricsSummary& s);
/// Per-view labeled boxes and screen positions of navigable markers, for the UI.
ojson render_payload(const Environment& env, const Observation& obs, const CameraIntrinsics& intr = {});
ojson wire_observation(const Environment& env, const Observation& obs, const CameraIntrinsics& intr = {});
/// {task_id, trajectory, metrics}
ojson wire_result(const Environment& env, const Task& task, const Trajectory& traj, const CameraIntrinsics& intr = {});

struct Reply {
  int status = 200;
  ojson body;
};

/// Transport-free session logic. Every method is safe to call concurrently;
/// actions on one session are serialized, sessions are independent.
class EpisodeService {
 public:
  using Clock = std::function<std::chrono::steady_clock::time_point()>;

  explicit EpisodeService(std::vector<World> worlds, ServerConfig config = {}, Clock clock = nullptr);

  Reply create_session(std::string_view body);
  Reply observation(const std::string& session);
  Reply action(const std::string& session, std::string_view body);
  Reply result(const std::string& session);
  Reply tasks() const;

  std::size_t live_sessions();
  const std::vector<World>& worlds() const { return worlds_; }

 private:
  struct Session {
    std::string id;
    const World* world = nullptr;
    const Task* task = nullptr;
    std::unique_ptr<Episode> episode;
    std::chrono::steady_clock::time_point created, last_active;
    bool finished = false;
    int seq = 0;  // actions applied so far
    std::optional<std::pair<std::string, Reply>> last;  // body and reply of the last accepted action
    std::mutex mu;
  };

  std::shared_ptr<Session> find(const std::string& id);
  void expire_idle(std::chrono::steady_clock::time_point now);
  ojson state_body(Session& s) const;

  std::vector<World> worlds_;
  ServerConfig config_;
  Clock clock_;
  std::mutex mu_;
  std::map<std::string, std::shared_ptr<Session>> sessions_;
  std::uint64_t next_id_ = 1;
};

/// HTTP front end: POST /sessions, GET /sessions/{id}/observation,
/// POST /sessions/{id}/action, GET /sessions/{id}/result, GET /tasks.
class HttpServer {
 public:
  explicit HttpServer(EpisodeService& service);
  ~HttpServer();
  HttpServer(const HttpServer&) = delete;
  HttpServer& operator=(const HttpServer&) = delete;

  /// Binds; port 0 picks a free port. Returns the bound port or -1.
  int bind(const std::string& host, int port);
  /// Blocks until stop().
  void listen();
  void stop();

 private:
  EpisodeService* service_;
  std::unique_ptr<httplib::Server> http_;
};

/// REFNAV_PORT if set and valid, else the fallback.
int port_from_env(int fallback);

}  // namespace refnav
