#include "refnav/server.hpp"

#include <cstdio>
#include <cstdlib>
#include <sstream>

#include "httplib.h"

namespace refnav {

namespace {

std::string trim(std::string s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return "";
  return s.substr(b, s.find_last_not_of(" \t\r") - b + 1);
}

Reply error(int status, const std::string& code, const std::string& message) {
  return {status, {{"code", code}, {"message", message}}};
}

ojson parse_body(std::string_view body) {
  ojson j = ojson::parse(body, nullptr, false);
  if (j.is_discarded() || !j.is_object()) throw ParseError("request body must be a JSON object");
  return j;
}

std::string join(const std::vector<std::string>& words) {
  std::string out;
  for (const auto& w : words) out += (out.empty() ? "" : " ") + w;
  return out;
}

}  // namespace

ServerConfig parse_server_config(std::string_view text) {
  ServerConfig cfg;
  std::istringstream in{std::string(text)};
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (auto hash = line.find('#'); hash != std::string::npos) line.resize(hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    const std::string where = "server config line " + std::to_string(line_no);
    if (eq == std::string::npos) throw std::invalid_argument(where + ": expected key = value");
    const std::string key = trim(line.substr(0, eq)), value = trim(line.substr(eq + 1));
    std::size_t used = 0;
    try {
      if (key == "idle_timeout_s") {
        const double s = std::stod(value, &used);
        if (!(s > 0)) throw std::invalid_argument("must be positive");
        cfg.idle_timeout = std::chrono::milliseconds(static_cast<long long>(s * 1000.0));
      } else if (key == "max_steps") {
        cfg.engine.max_steps = std::stoi(value, &used);
        if (cfg.engine.max_steps < 1) throw std::invalid_argument("must be at least 1");
      } else {
        throw std::invalid_argument("unknown key " + key);
      }
    } catch (const std::invalid_argument& e) {
      throw std::invalid_argument(where + ": " + e.what());
    } catch (const std::out_of_range&) {
      throw std::invalid_argument(where + ": value out of range");
    }
    if (used != value.size()) throw std::invalid_argument(where + ": bad value '" + value + "'");
  }
  return cfg;
}

ojson task_result_to_json(const TaskResult& r) {
  return {{"task_id", r.task_id},
          {"nav_success", r.nav_success},
          {"oracle_success", r.oracle_success},
          {"reverie_success", r.reverie_success},
          {"path_length", r.path_length},
          {"shortest_length", r.shortest_length},
          {"spl", r.spl_term}};
}

ojson summary_to_json(const MetricsSummary& s) {
  return {{"n", s.n},
          {"success", s.success},
          {"oracle_success", s.oracle_success},
          {"spl", s.spl},
          {"length", s.length},
          {"reverie_success", s.reverie_success}};
}

ojson render_payload(const Environment& env, const Observation& obs, const CameraIntrinsics& intr) {
  const Vec3 here = env.viewpoint(obs.viewpoint).position;
  const double f = intr.focal(), cx = intr.width / 2.0, cy = intr.height / 2.0;
  ojson views = ojson::array();
  for (const auto& v : obs.views) {
    ojson boxes = ojson::array();
    for (const auto& c : v.candidates)
      boxes.push_back({{"object", c.object}, {"label", env.object(c.object).label}, {"bbox", bbox_to_json(c.bbox)}});
    const CameraPose pose = camera_pose(here, v.state.heading(), v.state.elevation());
    ojson markers = ojson::array();
    for (const auto& n : obs.navigable) {
      const Vec3 c = pose.to_camera(env.viewpoint(n.viewpoint).position);
      if (c.z <= kNearPlane) continue;
      const double u = cx - f * c.x / c.z, w = cy - f * c.y / c.z;
      if (u < 0 || u > intr.width || w < 0 || w > intr.height) continue;
      markers.push_back({{"viewpoint", n.viewpoint}, {"u", u}, {"v", w}});
    }
    views.push_back({{"k", v.state.index()}, {"boxes", std::move(boxes)}, {"markers", std::move(markers)}});
  }
  return {{"width", intr.width}, {"height", intr.height}, {"views", std::move(views)}};
}

ojson wire_observation(const Environment& env, const Observation& obs, const CameraIntrinsics& intr) {
  ojson j = observation_to_json(obs);
  j["render"] = render_payload(env, obs, intr);
  return j;
}

ojson wire_result(const Environment& env, const Task& task, const Trajectory& traj, const CameraIntrinsics& intr) {
  return {{"task_id", task.id},
          {"trajectory", trajectory_to_json(traj)},
          {"metrics", task_result_to_json(evaluate(env, task, traj, intr))}};
}

EpisodeService::EpisodeService(std::vector<World> worlds, ServerConfig config, Clock clock)
    : worlds_(std::move(worlds)), config_(config), clock_(std::move(clock)) {
  if (!clock_) clock_ = [] { return std::chrono::steady_clock::now(); };
}

void EpisodeService::expire_idle(std::chrono::steady_clock::time_point now) {
  for (auto it = sessions_.begin(); it != sessions_.end();) {
    if (now - it->second->last_active > config_.idle_timeout) it = sessions_.erase(it);
    else ++it;
  }
}

std::shared_ptr<EpisodeService::Session> EpisodeService::find(const std::string& id) {
  std::lock_guard lock(mu_);
  const auto now = clock_();
  expire_idle(now);
  auto it = sessions_.find(id);
  if (it == sessions_.end()) return nullptr;
  return it->second;
}

std::size_t EpisodeService::live_sessions() {
  std::lock_guard lock(mu_);
  expire_idle(clock_());
  return sessions_.size();
}

ojson EpisodeService::state_body(Session& s) const {
  const Observation obs = s.episode->observe();
  return {{"session_id", s.id},
          {"seq", s.seq},
          {"done", s.finished},
          {"observation", wire_observation(s.world->env, obs, config_.engine.intrinsics)}};
}

Reply EpisodeService::create_session(std::string_view body) {
  std::string env_id, task_id;
  try {
    const ojson j = parse_body(body);
    env_id = j.at("env_id").get<std::string>();
    task_id = j.at("task_id").get<std::string>();
  } catch (const std::exception& e) {
    return error(400, "bad_request", std::string("expected {env_id, task_id}: ") + e.what());
  }
  const World* world = nullptr;
  const Task* task = nullptr;
  for (const auto& w : worlds_) {
    if (w.env.id() != env_id) continue;
    world = &w;
    for (const auto& t : w.tasks) {
      if (t.id == task_id) task = &t;
    }
  }
  if (!world) return error(404, "unknown_env", "no environment " + env_id);
  if (!task) return error(404, "unknown_task", "no task " + task_id + " in " + env_id);

  auto s = std::make_shared<Session>();
  s->world = world;
  s->task = task;
  s->episode = std::make_unique<Episode>(world->env, *task, config_.engine);
  {
    std::lock_guard lock(mu_);
    const auto now = clock_();
    expire_idle(now);
    char id[32];
    std::snprintf(id, sizeof id, "s%06llu", static_cast<unsigned long long>(next_id_++));
    s->id = id;
    s->created = s->last_active = now;
    sessions_[s->id] = s;
  }
  std::lock_guard lock(s->mu);
  return {201, state_body(*s)};
}

Reply EpisodeService::observation(const std::string& id) {
  auto s = find(id);
  if (!s) return error(404, "unknown_session", "no live session " + id);
  std::lock_guard lock(s->mu);
  s->last_active = clock_();
  return {200, state_body(*s)};
}

Reply EpisodeService::action(const std::string& id, std::string_view body) {
  auto s = find(id);
  if (!s) return error(404, "unknown_session", "no live session " + id);
  std::lock_guard lock(s->mu);
  s->last_active = clock_();

  int seq = 0;
  Action action;
  std::string canonical;
  try {
    const ojson j = parse_body(body);
    seq = j.at("seq").get<int>();
    action = action_from_json(j.at("action"));
    canonical = j.dump();
  } catch (const std::exception& e) {
    return error(400, "bad_request", std::string("expected {seq, action}: ") + e.what());
  }
  // A retried submission of the last accepted action gets the same reply.
  if (s->last && seq == s->seq - 1 && s->last->first == canonical) return s->last->second;
  if (s->finished) return error(409, "episode_finished", "episode already finished");
  if (seq != s->seq)
    return error(409, "out_of_sequence", "expected seq " + std::to_string(s->seq) + ", got " + std::to_string(seq));

  std::optional<Observation> next;
  try {
    next = s->episode->step(action);
  } catch (const EpisodeError& e) {
    using Kind = EpisodeError::Kind;
    switch (e.kind()) {
      case Kind::kSecondDetection: return error(409, "second_detection", e.what());
      case Kind::kAfterDone:
      case Kind::kStepLimit: return error(409, "episode_finished", e.what());
      default: return error(400, "invalid_action", e.what());
    }
  }
  ++s->seq;
  Reply reply;
  if (next) {
    reply.body = {{"session_id", s->id},
                  {"seq", s->seq},
                  {"done", false},
                  {"observation", wire_observation(s->world->env, *next, config_.engine.intrinsics)}};
  } else {
    s->finished = true;
    reply.body = {{"session_id", s->id},
                  {"seq", s->seq},
                  {"done", true},
                  {"result", wire_result(s->world->env, *s->task, s->episode->trajectory(), config_.engine.intrinsics)}};
  }
  s->last = {canonical, reply};
  return reply;
}

Reply EpisodeService::result(const std::string& id) {
  auto s = find(id);
  if (!s) return error(404, "unknown_session", "no live session " + id);
  std::lock_guard lock(s->mu);
  s->last_active = clock_();
  if (!s->finished) return error(409, "episode_running", "episode has not finished");
  return {200, wire_result(s->world->env, *s->task, s->episode->trajectory(), config_.engine.intrinsics)};
}

Reply EpisodeService::tasks() const {
  ojson list = ojson::array();
  for (const auto& w : worlds_) {
    for (const auto& t : w.tasks) {
      list.push_back({{"env_id", w.env.id()},
                      {"task_id", t.id},
                      {"instruction", join(t.instruction)},
                      {"start_viewpoint", t.start_viewpoint}});
    }
  }
  return {200, {{"tasks", std::move(list)}}};
}

HttpServer::HttpServer(EpisodeService& service) : service_(&service), http_(std::make_unique<httplib::Server>()) {
  auto send = [](httplib::Response& res, const Reply& r) {
    res.status = r.status;
    res.set_content(r.body.dump(), "application/json");
  };
  http_->Post("/sessions", [this, send](const httplib::Request& req, httplib::Response& res) {
    send(res, service_->create_session(req.body));
  });
  http_->Get(R"(/sessions/([^/]+)/observation)", [this, send](const httplib::Request& req, httplib::Response& res) {
    send(res, service_->observation(req.matches[1]));
  });
  http_->Post(R"(/sessions/([^/]+)/action)", [this, send](const httplib::Request& req, httplib::Response& res) {
    send(res, service_->action(req.matches[1], req.body));
  });
  http_->Get(R"(/sessions/([^/]+)/result)", [this, send](const httplib::Request& req, httplib::Response& res) {
    send(res, service_->result(req.matches[1]));
  });
  http_->Get("/tasks", [this, send](const httplib::Request&, httplib::Response& res) { send(res, service_->tasks()); });
  http_->set_error_handler([](const httplib::Request& req, httplib::Response& res) {
    if (!res.body.empty()) return;
    res.set_content(ojson{{"code", "not_found"}, {"message", "no route " + req.method + " " + req.path}}.dump(),
                    "application/json");
  });
  http_->set_exception_handler([](const httplib::Request&, httplib::Response& res, std::exception_ptr ep) {
    std::string what = "internal error";
    try {
      std::rethrow_exception(ep);
    } catch (const std::exception& e) {
      what = e.what();
    } catch (...) {
    }
    res.status = 500;
    res.set_content(ojson{{"code", "internal"}, {"message", what}}.dump(), "application/json");
  });
}

HttpServer::~HttpServer() { stop(); }

int HttpServer::bind(const std::string& host, int port) {
  if (port == 0) return http_->bind_to_any_port(host);
  return http_->bind_to_port(host, port) ? port : -1;
}

void HttpServer::listen() { http_->listen_after_bind(); }

void HttpServer::stop() {
  if (http_) http_->stop();
}

int port_from_env(int fallback) {
  const char* v = std::getenv("REFNAV_PORT");
  if (!v || !*v) return fallback;
  char* end = nullptr;
  const long p = std::strtol(v, &end, 10);
  if (*end != '\0' || p < 0 || p > 65535) return fallback;
  return static_cast<int>(p);
}

}  // namespace refnav
