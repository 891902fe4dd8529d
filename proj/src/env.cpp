#include "refnav/env.hpp"

#include <algorithm>
#include <fstream>
#include <limits>
#include <queue>
#include <set>
#include <sstream>

#include "json.hpp"

namespace refnav {

using json = nlohmann::ordered_json;

namespace {

constexpr double kEdgeTolerance = 1e-6;
constexpr double kPathTieTolerance = 1e-9;

bool finite(Vec3 v) { return std::isfinite(v.x) && std::isfinite(v.y) && std::isfinite(v.z); }

json vec_to_json(Vec3 v) { return json::array({v.x, v.y, v.z}); }

Vec3 vec_from_json(const json& j, std::string_view what) {
  if (!j.is_array() || j.size() != 3) throw ParseError(std::string(what) + " must be a 3-element array");
  return {j[0].get<double>(), j[1].get<double>(), j[2].get<double>()};
}

void check_version(const json& j, std::string_view what) {
  if (!j.contains("format_version")) throw ParseError(std::string(what) + ": missing format_version");
  const int v = j.at("format_version").get<int>();
  if (v != kFormatVersion)
    throw ParseError(std::string(what) + ": unsupported format_version " + std::to_string(v));
}

}  // namespace

Environment::Environment(std::string id, std::vector<Viewpoint> viewpoints, std::vector<Edge> edges,
                         std::vector<ObjectAnnotation> objects, std::uint64_t feature_seed)
    : id_(std::move(id)),
      viewpoints_(std::move(viewpoints)),
      edges_(std::move(edges)),
      objects_(std::move(objects)),
      feature_seed_(feature_seed) {
  if (id_.empty()) throw ValidationError("environment id is empty");
  if (viewpoints_.empty()) throw ValidationError("environment has no viewpoints");
  for (std::size_t i = 0; i < viewpoints_.size(); ++i) {
    const auto& vp = viewpoints_[i];
    if (vp.id.empty()) throw ValidationError("viewpoint id is empty");
    if (!finite(vp.position)) throw ValidationError("viewpoint " + vp.id + " has non-finite position");
    if (!vp_index_.emplace(vp.id, i).second) throw ValidationError("duplicate viewpoint id " + vp.id);
  }
  adjacency_.resize(viewpoints_.size());
  std::set<std::pair<std::size_t, std::size_t>> seen;
  for (const Edge& e : edges_) {
    auto ia = vp_index_.find(e.a);
    auto ib = vp_index_.find(e.b);
    if (ia == vp_index_.end() || ib == vp_index_.end())
      throw ValidationError("edge " + e.a + "-" + e.b + " references an unknown viewpoint");
    if (ia->second == ib->second) throw ValidationError("edge " + e.a + "-" + e.b + " is a self loop");
    const auto key = std::minmax(ia->second, ib->second);
    if (!seen.insert(key).second) throw ValidationError("duplicate edge " + e.a + "-" + e.b);
    const double d = distance(viewpoints_[ia->second].position, viewpoints_[ib->second].position);
    if (!(std::abs(d - e.length) <= kEdgeTolerance))
      throw ValidationError("edge " + e.a + "-" + e.b + " length " + std::to_string(e.length) +
                            " differs from endpoint distance " + std::to_string(d));
    adjacency_[ia->second].push_back({ib->second, e.length});
    adjacency_[ib->second].push_back({ia->second, e.length});
  }
  for (auto& list : adjacency_) {
    std::sort(list.begin(), list.end(), [&](const Neighbor& l, const Neighbor& r) {
      return viewpoints_[l.index].id < viewpoints_[r.index].id;
    });
  }
  // connectivity
  std::vector<bool> reached(viewpoints_.size(), false);
  std::vector<std::size_t> stack{0};
  reached[0] = true;
  while (!stack.empty()) {
    const std::size_t u = stack.back();
    stack.pop_back();
    for (const Neighbor& n : adjacency_[u]) {
      if (!reached[n.index]) {
        reached[n.index] = true;
        stack.push_back(n.index);
      }
    }
  }
  for (std::size_t i = 0; i < reached.size(); ++i) {
    if (!reached[i]) throw ValidationError("graph is not connected: " + viewpoints_[i].id + " is unreachable");
  }
  for (std::size_t i = 0; i < objects_.size(); ++i) {
    const auto& o = objects_[i];
    if (o.id.empty()) throw ValidationError("object id is empty");
    if (o.label.empty()) throw ValidationError("object " + o.id + " has an empty label");
    if (o.category.empty()) throw ValidationError("object " + o.id + " has an empty category");
    if (auto why = validate_box(o.box); !why.empty()) throw ValidationError("object " + o.id + ": " + why);
    if (!obj_index_.emplace(o.id, i).second) throw ValidationError("duplicate object id " + o.id);
  }
}

bool Environment::has_viewpoint(std::string_view id) const { return vp_index_.find(id) != vp_index_.end(); }
bool Environment::has_object(std::string_view id) const { return obj_index_.find(id) != obj_index_.end(); }

std::size_t Environment::viewpoint_index(std::string_view id) const {
  auto it = vp_index_.find(id);
  if (it == vp_index_.end()) throw std::out_of_range("unknown viewpoint " + std::string(id));
  return it->second;
}

const Viewpoint& Environment::viewpoint(std::string_view id) const { return viewpoints_[viewpoint_index(id)]; }

const ObjectAnnotation& Environment::object(std::string_view id) const {
  auto it = obj_index_.find(id);
  if (it == obj_index_.end()) throw std::out_of_range("unknown object " + std::string(id));
  return objects_[it->second];
}

double Environment::edge_length(std::string_view a, std::string_view b) const {
  const std::size_t ia = viewpoint_index(a);
  const std::size_t ib = viewpoint_index(b);
  for (const Neighbor& n : adjacency_[ia]) {
    if (n.index == ib) return n.length;
  }
  return -1.0;
}

void validate_task(const Environment& env, const Task& task) {
  const std::string where = "task " + task.id + ": ";
  if (task.id.empty()) throw ValidationError("task id is empty");
  if (task.instruction.empty()) throw ValidationError(where + "instruction is empty");
  if (!env.has_viewpoint(task.start_viewpoint))
    throw ValidationError(where + "unknown start viewpoint " + task.start_viewpoint);
  if (!env.has_object(task.target_object))
    throw ValidationError(where + "unknown target object " + task.target_object);
  if (!std::isfinite(task.start_heading) || !std::isfinite(task.start_elevation))
    throw ValidationError(where + "start orientation is not finite");
  if (task.goal_viewpoints.empty()) throw ValidationError(where + "goal_viewpoints is empty");
  const Vec3 target = env.object(task.target_object).box.center;
  for (const auto& g : task.goal_viewpoints) {
    if (!env.has_viewpoint(g)) throw ValidationError(where + "unknown goal viewpoint " + g);
    if (distance(env.viewpoint(g).position, target) > kVisibilityRadius)
      throw ValidationError(where + "goal viewpoint " + g + " is farther than 3 m from the target");
  }
}

std::string environment_to_json(const Environment& env) {
  json j;
  j["format_version"] = kFormatVersion;
  j["id"] = env.id();
  json vps = json::array();
  for (const auto& vp : env.viewpoints()) vps.push_back({{"id", vp.id}, {"position", vec_to_json(vp.position)}});
  j["viewpoints"] = std::move(vps);
  json edges = json::array();
  for (const auto& e : env.edges()) edges.push_back({{"a", e.a}, {"b", e.b}, {"length", e.length}});
  j["edges"] = std::move(edges);
  json objs = json::array();
  for (const auto& o : env.objects()) {
    json axes = json::array();
    for (const auto& a : o.box.axes) axes.push_back(vec_to_json(a));
    objs.push_back({{"id", o.id},
                    {"label", o.label},
                    {"category", o.category},
                    {"box",
                     {{"center", vec_to_json(o.box.center)},
                      {"axes", std::move(axes)},
                      {"radii", json::array({o.box.radii[0], o.box.radii[1], o.box.radii[2]})}}}});
  }
  j["objects"] = std::move(objs);
  j["feature_seed"] = env.feature_seed();
  return j.dump(1) + "\n";
}

Environment environment_from_json(std::string_view text) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::parse_error& e) {
    throw ParseError(std::string("environment: ") + e.what());
  }
  try {
    check_version(j, "environment");
    std::vector<Viewpoint> vps;
    for (const auto& v : j.at("viewpoints")) vps.push_back({v.at("id").get<std::string>(), vec_from_json(v.at("position"), "position")});
    std::vector<Edge> edges;
    for (const auto& e : j.at("edges"))
      edges.push_back({e.at("a").get<std::string>(), e.at("b").get<std::string>(), e.at("length").get<double>()});
    std::vector<ObjectAnnotation> objs;
    for (const auto& o : j.at("objects")) {
      ObjectAnnotation a;
      a.id = o.at("id").get<std::string>();
      a.label = o.at("label").get<std::string>();
      a.category = o.at("category").get<std::string>();
      const auto& b = o.at("box");
      a.box.center = vec_from_json(b.at("center"), "box center");
      const auto& axes = b.at("axes");
      if (!axes.is_array() || axes.size() != 3) throw ParseError("box axes must hold three vectors");
      for (int i = 0; i < 3; ++i) a.box.axes[i] = vec_from_json(axes[i], "box axis");
      const auto& radii = b.at("radii");
      if (!radii.is_array() || radii.size() != 3) throw ParseError("box radii must hold three values");
      for (int i = 0; i < 3; ++i) a.box.radii[i] = radii[i].get<double>();
      objs.push_back(std::move(a));
    }
    return Environment(j.at("id").get<std::string>(), std::move(vps), std::move(edges), std::move(objs),
                       j.at("feature_seed").get<std::uint64_t>());
  } catch (const json::exception& e) {
    throw ParseError(std::string("environment: ") + e.what());
  }
}

std::string read_text_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ParseError("cannot open " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_text_file(const std::filesystem::path& path, std::string_view text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  out << text;
}

Environment load_environment(const std::filesystem::path& path) {
  return environment_from_json(read_text_file(path));
}

void save_environment(const Environment& env, const std::filesystem::path& path) {
  write_text_file(path, environment_to_json(env));
}

std::string tasks_to_json(const std::vector<Task>& tasks) {
  json arr = json::array();
  for (const auto& t : tasks) {
    arr.push_back({{"format_version", kFormatVersion},
                   {"id", t.id},
                   {"instruction", t.instruction},
                   {"start_viewpoint", t.start_viewpoint},
                   {"start_heading", t.start_heading},
                   {"start_elevation", t.start_elevation},
                   {"target_object", t.target_object},
                   {"goal_viewpoints", t.goal_viewpoints}});
  }
  return arr.dump(1) + "\n";
}

std::vector<Task> tasks_from_json(std::string_view text) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::parse_error& e) {
    throw ParseError(std::string("tasks: ") + e.what());
  }
  if (!j.is_array()) throw ParseError("tasks: top level must be an array");
  std::vector<Task> tasks;
  try {
    for (const auto& t : j) {
      check_version(t, "task");
      Task task;
      task.id = t.at("id").get<std::string>();
      task.instruction = t.at("instruction").get<std::vector<std::string>>();
      task.start_viewpoint = t.at("start_viewpoint").get<std::string>();
      task.start_heading = t.at("start_heading").get<double>();
      task.start_elevation = t.at("start_elevation").get<double>();
      task.target_object = t.at("target_object").get<std::string>();
      task.goal_viewpoints = t.at("goal_viewpoints").get<std::vector<std::string>>();
      tasks.push_back(std::move(task));
    }
  } catch (const json::exception& e) {
    throw ParseError(std::string("tasks: ") + e.what());
  }
  return tasks;
}

std::vector<Task> load_tasks(const std::filesystem::path& path, const Environment& env) {
  auto tasks = tasks_from_json(read_text_file(path));
  std::set<std::string> ids;
  for (const auto& t : tasks) {
    validate_task(env, t);
    if (!ids.insert(t.id).second) throw ValidationError("duplicate task id " + t.id);
  }
  return tasks;
}

void save_tasks(const std::vector<Task>& tasks, const std::filesystem::path& path) {
  write_text_file(path, tasks_to_json(tasks));
}

std::vector<double> distances_from(const Environment& env, std::string_view from) {
  const std::size_t src = env.viewpoint_index(from);
  const std::size_t n = env.viewpoints().size();
  std::vector<double> dist(n, std::numeric_limits<double>::infinity());
  using Item = std::pair<double, std::size_t>;
  std::priority_queue<Item, std::vector<Item>, std::greater<>> pq;
  dist[src] = 0.0;
  pq.push({0.0, src});
  while (!pq.empty()) {
    auto [d, u] = pq.top();
    pq.pop();
    if (d > dist[u]) continue;
    for (const Neighbor& nb : env.neighbors(u)) {
      const double nd = d + nb.length;
      if (nd < dist[nb.index]) {
        dist[nb.index] = nd;
        pq.push({nd, nb.index});
      }
    }
  }
  return dist;
}

std::string nearest_goal(const Environment& env, const Task& task) {
  if (task.goal_viewpoints.empty()) throw ValidationError("task " + task.id + " has no goal viewpoints");
  const auto dist = distances_from(env, task.start_viewpoint);
  std::string best = task.goal_viewpoints.front();
  for (const auto& g : task.goal_viewpoints) {
    const double dg = dist[env.viewpoint_index(g)], db = dist[env.viewpoint_index(best)];
    if (dg < db || (dg == db && g < best)) best = g;
  }
  return best;
}

Path shortest_path(const Environment& env, std::string_view from, std::string_view to) {
  const std::size_t src = env.viewpoint_index(from);
  const std::size_t dst = env.viewpoint_index(to);
  // Distances to the destination; the graph is undirected.
  const std::vector<double> to_dst = distances_from(env, to);
  if (!std::isfinite(to_dst[src])) {
    throw std::runtime_error("viewpoint " + std::string(to) + " is unreachable from " + std::string(from));
  }
  Path path;
  path.viewpoints.push_back(env.viewpoints()[src].id);
  std::size_t u = src;
  while (u != dst) {
    // Neighbors are id-sorted, so the first one that stays on a shortest path
    // yields the lexicographically smallest sequence.
    std::size_t next = u;
    double step = 0.0;
    for (const Neighbor& nb : env.neighbors(u)) {
      if (std::abs(nb.length + to_dst[nb.index] - to_dst[u]) <= kPathTieTolerance) {
        next = nb.index;
        step = nb.length;
        break;
      }
    }
    if (next == u) throw std::runtime_error("shortest path reconstruction failed");
    path.viewpoints.push_back(env.viewpoints()[next].id);
    path.length += step;
    u = next;
  }
  return path;
}

std::vector<const ObjectAnnotation*> objects_near(const Environment& env, std::string_view vp, double radius) {
  const Vec3 p = env.viewpoint(vp).position;
  std::vector<std::pair<double, const ObjectAnnotation*>> hits;
  for (const auto& o : env.objects()) {
    const double d = distance(p, o.box.center);
    if (d <= radius) hits.push_back({d, &o});
  }
  std::sort(hits.begin(), hits.end(), [](const auto& a, const auto& b) {
    if (a.first != b.first) return a.first < b.first;
    return a.second->id < b.second->id;
  });
  std::vector<const ObjectAnnotation*> out;
  out.reserve(hits.size());
  for (const auto& h : hits) out.push_back(h.second);
  return out;
}

}  // namespace refnav
