#include "refnav/episode.hpp"

#include <algorithm>
#include <sstream>

#include "refnav/json_io.hpp"

namespace refnav {

namespace {

double wrap_angle(double a) {
  const double two_pi = 2.0 * std::numbers::pi;
  a = std::fmod(a, two_pi);
  if (a <= -std::numbers::pi) a += two_pi;
  if (a > std::numbers::pi) a -= two_pi;
  return a;
}

bool finite_box(const BBox2D& b) {
  return std::isfinite(b.x) && std::isfinite(b.y) && std::isfinite(b.w) && std::isfinite(b.h) && b.w >= 0.0 &&
         b.h >= 0.0;
}

}  // namespace

Episode::Episode(const Environment& env, Task task, EngineConfig config)
    : env_(&env), config_(std::move(config)), started_(std::chrono::steady_clock::now()) {
  try {
    validate_task(env, task);
  } catch (const ValidationError& e) {
    throw EpisodeError(EpisodeError::Kind::kInvalidTask, e.what());
  }
  if (config_.max_steps < 0) throw std::invalid_argument("max_steps must be non-negative");
  state_.task = std::move(task);
  state_.current_viewpoint = state_.task.start_viewpoint;
  state_.heading = state_.task.start_heading;
  state_.elevation = state_.task.start_elevation;
  state_.path.push_back(state_.current_viewpoint);
  state_.navigation_finished = config_.max_steps == 0;
}

const Panorama& Episode::current_panorama() const {
  if (!pano_) pano_ = panorama(*env_, state_.current_viewpoint, config_.intrinsics);
  return *pano_;
}

Observation Episode::observe() const {
  Observation obs;
  obs.viewpoint = state_.current_viewpoint;
  obs.heading = state_.heading;
  obs.elevation = state_.elevation;
  obs.step = state_.step_count;
  obs.navigation_finished = state_.navigation_finished;
  obs.instruction = state_.task.instruction;
  const Panorama& pano = current_panorama();
  obs.views.reserve(kViewCount);
  for (int k = 1; k <= kViewCount; ++k) {
    ViewObservation v;
    v.state = ViewState::from_index(state_.current_viewpoint, k);
    v.candidates = pano[k - 1];
    v.feature = view_feature(*env_, v.state, v.candidates, config_.feature_dim);
    obs.views.push_back(std::move(v));
  }
  const std::size_t here = env_->viewpoint_index(state_.current_viewpoint);
  const Vec3 p = env_->viewpoints()[here].position;
  for (const Neighbor& nb : env_->neighbors(here)) {
    const Vec3 q = env_->viewpoints()[nb.index].position;
    const double horizontal = std::hypot(q.x - p.x, q.y - p.y);
    obs.navigable.push_back({env_->viewpoints()[nb.index].id, wrap_angle(heading_towards(p, q) - state_.heading),
                             std::atan2(q.z - p.z, horizontal) - state_.elevation, nb.length});
  }
  return obs;
}

std::optional<Observation> Episode::step(const Action& action) {
  using Kind = EpisodeError::Kind;
  if (state_.done) {
    if (std::holds_alternative<Detect>(action) && state_.detection)
      throw EpisodeError(Kind::kSecondDetection, "the target may only be detected once per episode");
    throw EpisodeError(Kind::kAfterDone, "episode is already finished");
  }
  if (const auto* mv = std::get_if<Move>(&action)) {
    if (mv->viewpoint == state_.current_viewpoint) {
      if (state_.navigation_finished)
        throw EpisodeError(Kind::kIllegalMove, "navigation has already finished");
      state_.navigation_finished = true;
      state_.actions.push_back(action);
      return observe();
    }
    if (state_.navigation_finished)
      throw EpisodeError(Kind::kStepLimit, "navigation has finished; only Detect or Stop are accepted");
    if (!env_->has_viewpoint(mv->viewpoint) || env_->edge_length(state_.current_viewpoint, mv->viewpoint) < 0.0)
      throw EpisodeError(Kind::kIllegalMove,
                         "viewpoint " + mv->viewpoint + " is not navigable from " + state_.current_viewpoint);
    const Vec3 from = env_->viewpoint(state_.current_viewpoint).position;
    const Vec3 to = env_->viewpoint(mv->viewpoint).position;
    state_.heading = heading_towards(from, to);
    state_.elevation = 0.0;
    state_.current_viewpoint = mv->viewpoint;
    state_.path.push_back(mv->viewpoint);
    ++state_.step_count;
    if (state_.step_count >= config_.max_steps) state_.navigation_finished = true;
    state_.actions.push_back(action);
    pano_.reset();
    return observe();
  }
  if (std::holds_alternative<Stop>(action)) {
    state_.actions.push_back(action);
    if (state_.navigation_finished) {
      state_.done = true;
      return std::nullopt;
    }
    state_.navigation_finished = true;
    return observe();
  }
  const Detection& det = std::get<Detect>(action).detection;
  if (const auto* choice = std::get_if<CandidateChoice>(&det)) {
    bool offered = false;
    for (const auto& view : current_panorama()) {
      for (const auto& p : view) offered = offered || p.object == choice->object;
    }
    if (!offered)
      throw EpisodeError(Kind::kInvalidDetection,
                         "object " + choice->object + " is not a candidate at " + state_.current_viewpoint);
  } else {
    const auto& out = std::get<BBoxOutput>(det);
    if (out.view < 1 || out.view > kViewCount) throw EpisodeError(Kind::kInvalidDetection, "view index must be in 1..36");
    if (!finite_box(out.bbox)) throw EpisodeError(Kind::kInvalidDetection, "bounding box must be finite and non-negative");
  }
  state_.detection = det;
  state_.navigation_finished = true;
  state_.done = true;
  state_.actions.push_back(action);
  return std::nullopt;
}

Trajectory Episode::trajectory() const {
  Trajectory t;
  t.task_id = state_.task.id;
  t.path = state_.path;
  t.actions = state_.actions;
  t.detection = state_.detection;
  t.steps = state_.step_count;
  t.wall_time_s = std::chrono::duration<double>(std::chrono::steady_clock::now() - started_).count();
  return t;
}

std::pair<Episode, Observation> start_episode(const Environment& env, const Task& task, EngineConfig config) {
  Episode ep(env, task, std::move(config));
  Observation obs = ep.observe();
  return {std::move(ep), std::move(obs)};
}

std::vector<Trajectory> run_agent(const Environment& env, const std::vector<Task>& tasks, Agent& agent,
                                  const EngineConfig& config) {
  std::vector<Trajectory> out;
  out.reserve(tasks.size());
  for (const Task& task : tasks) {
    try {
      Episode ep(env, task, config);
      agent.begin(env, task);
      std::optional<Observation> obs = ep.observe();
      // Every accepted action either moves (bounded by max_steps) or advances
      // the finish state, so the loop is bounded.
      while (obs) obs = ep.step(agent.act(*obs));
      out.push_back(ep.trajectory());
    } catch (const EpisodeError& e) {
      throw EpisodeError(e.kind(), "task " + task.id + ": " + e.what());
    }
  }
  return out;
}

Trajectory replay(const Environment& env, const Task& task, const std::vector<Action>& actions,
                  const EngineConfig& config) {
  Episode ep(env, task, config);
  for (const Action& a : actions) ep.step(a);
  return ep.trajectory();
}

std::string describe(const Action& a) {
  return std::visit(
      [](const auto& v) -> std::string {
        using T = std::decay_t<decltype(v)>;
        if constexpr (std::is_same_v<T, Move>) return "move " + v.viewpoint;
        else if constexpr (std::is_same_v<T, Stop>) return "stop";
        else return "detect";
      },
      a);
}

// ---- JSON --------------------------------------------------------------------

ojson bbox_to_json(const BBox2D& b) { return ojson::array({b.x, b.y, b.w, b.h}); }

BBox2D bbox_from_json(const ojson& j) {
  if (!j.is_array() || j.size() != 4) throw ParseError("bbox must be [x, y, w, h]");
  return {j[0].get<double>(), j[1].get<double>(), j[2].get<double>(), j[3].get<double>()};
}

ojson detection_to_json(const Detection& d) {
  if (const auto* c = std::get_if<CandidateChoice>(&d)) return {{"type", "candidate"}, {"object", c->object}};
  const auto& b = std::get<BBoxOutput>(d);
  return {{"type", "bbox"}, {"view", b.view}, {"bbox", bbox_to_json(b.bbox)}};
}

Detection detection_from_json(const ojson& j) {
  const std::string type = j.at("type").get<std::string>();
  if (type == "candidate") return CandidateChoice{j.at("object").get<std::string>()};
  if (type == "bbox") return BBoxOutput{j.at("view").get<int>(), bbox_from_json(j.at("bbox"))};
  throw ParseError("unknown detection type " + type);
}

ojson action_to_json(const Action& a) {
  if (const auto* m = std::get_if<Move>(&a)) return {{"type", "move"}, {"viewpoint", m->viewpoint}};
  if (std::holds_alternative<Stop>(a)) return {{"type", "stop"}};
  return {{"type", "detect"}, {"detection", detection_to_json(std::get<Detect>(a).detection)}};
}

Action action_from_json(const ojson& j) {
  const std::string type = j.at("type").get<std::string>();
  if (type == "move") return Move{j.at("viewpoint").get<std::string>()};
  if (type == "stop") return Stop{};
  if (type == "detect") return Detect{detection_from_json(j.at("detection"))};
  throw ParseError("unknown action type " + type);
}

ojson trajectory_to_json(const Trajectory& t) {
  ojson actions = ojson::array();
  for (const auto& a : t.actions) actions.push_back(action_to_json(a));
  return {{"task_id", t.task_id},
          {"path", t.path},
          {"actions", std::move(actions)},
          {"detection", t.detection ? detection_to_json(*t.detection) : ojson(nullptr)},
          {"steps", t.steps}};
}

Trajectory trajectory_from_json(const ojson& j) {
  Trajectory t;
  t.task_id = j.at("task_id").get<std::string>();
  t.path = j.at("path").get<std::vector<std::string>>();
  if (j.contains("actions")) {
    for (const auto& a : j.at("actions")) t.actions.push_back(action_from_json(a));
  }
  if (j.contains("detection") && !j.at("detection").is_null()) t.detection = detection_from_json(j.at("detection"));
  t.steps = j.at("steps").get<int>();
  if (t.path.empty()) throw ParseError("trajectory path is empty");
  return t;
}

std::string trajectory_to_json_line(const Trajectory& t) { return trajectory_to_json(t).dump(); }

std::vector<Trajectory> parse_trajectories(std::string_view text) {
  std::vector<Trajectory> out;
  std::istringstream in{std::string(text)};
  int line_no = 0;
  for (std::string line; std::getline(in, line);) {
    ++line_no;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    try {
      out.push_back(trajectory_from_json(ojson::parse(line)));
    } catch (const std::exception& e) {
      throw ParseError("line " + std::to_string(line_no) + ": " + e.what());
    }
  }
  return out;
}

ojson projected_to_json(const ProjectedObject& p) {
  return {{"object", p.object}, {"view", p.view.index()}, {"bbox", bbox_to_json(p.bbox)}, {"depth", p.depth}};
}

ProjectedObject projected_from_json(const ojson& j, const std::string& viewpoint) {
  ProjectedObject p;
  p.object = j.at("object").get<std::string>();
  p.view = ViewState::from_index(viewpoint, j.at("view").get<int>());
  p.bbox = bbox_from_json(j.at("bbox"));
  p.depth = j.at("depth").get<double>();
  return p;
}

ojson observation_to_json(const Observation& obs) {
  ojson views = ojson::array();
  for (const auto& v : obs.views) {
    ojson cands = ojson::array();
    for (const auto& c : v.candidates) cands.push_back(projected_to_json(c));
    views.push_back({{"k", v.state.index()},
                     {"heading", v.state.heading()},
                     {"elevation", v.state.elevation()},
                     {"feature", v.feature},
                     {"candidates", std::move(cands)}});
  }
  ojson nav = ojson::array();
  for (const auto& n : obs.navigable) {
    nav.push_back({{"viewpoint", n.viewpoint},
                   {"rel_heading", n.rel_heading},
                   {"rel_elevation", n.rel_elevation},
                   {"distance", n.distance}});
  }
  return {{"viewpoint", obs.viewpoint},
          {"heading", obs.heading},
          {"elevation", obs.elevation},
          {"step", obs.step},
          {"navigation_finished", obs.navigation_finished},
          {"instruction", obs.instruction},
          {"views", std::move(views)},
          {"navigable", std::move(nav)}};
}

Observation observation_from_json(const ojson& j) {
  Observation obs;
  obs.viewpoint = j.at("viewpoint").get<std::string>();
  obs.heading = j.at("heading").get<double>();
  obs.elevation = j.at("elevation").get<double>();
  obs.step = j.at("step").get<int>();
  obs.navigation_finished = j.at("navigation_finished").get<bool>();
  obs.instruction = j.at("instruction").get<std::vector<std::string>>();
  for (const auto& v : j.at("views")) {
    ViewObservation view;
    view.state = ViewState::from_index(obs.viewpoint, v.at("k").get<int>());
    view.feature = v.at("feature").get<std::vector<double>>();
    for (const auto& c : v.at("candidates")) view.candidates.push_back(projected_from_json(c, obs.viewpoint));
    obs.views.push_back(std::move(view));
  }
  for (const auto& n : j.at("navigable")) {
    obs.navigable.push_back({n.at("viewpoint").get<std::string>(), n.at("rel_heading").get<double>(),
                             n.at("rel_elevation").get<double>(), n.at("distance").get<double>()});
  }
  return obs;
}

}  // namespace refnav
