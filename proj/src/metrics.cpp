#include "refnav/metrics.hpp"

#include <algorithm>
#include <cstdio>
#include <limits>
#include <map>
#include <stdexcept>
#include <variant>

#include "refnav/scene.hpp"
#include <sstream>

namespace refnav {

bool target_observable(const Environment& env, const Task& task, std::string_view viewpoint,
                       const CameraIntrinsics& intr) {
  return object_visible_from(env, viewpoint, task.target_object, intr);
}

bool nav_success(const Environment& env, const Task& task, const Trajectory& traj, const CameraIntrinsics& intr) {
  if (traj.path.empty()) return false;
  return target_observable(env, task, traj.path.back(), intr);
}

bool oracle_success(const Environment& env, const Task& task, const Trajectory& traj, const CameraIntrinsics& intr) {
  std::vector<std::string> visited = traj.path;
  std::sort(visited.begin(), visited.end());
  visited.erase(std::unique(visited.begin(), visited.end()), visited.end());
  return std::any_of(visited.begin(), visited.end(),
                     [&](const std::string& vp) { return target_observable(env, task, vp, intr); });
}

double path_length(const Environment& env, const Trajectory& traj) {
  double total = 0.0;
  for (std::size_t i = 1; i < traj.path.size(); ++i) {
    const double len = env.edge_length(traj.path[i - 1], traj.path[i]);
    if (len < 0.0) throw ValidationError("trajectory hop " + traj.path[i - 1] + " -> " + traj.path[i] + " is not an edge");
    total += len;
  }
  return total;
}

double shortest_length(const Environment& env, const Task& task) {
  const auto dist = distances_from(env, task.start_viewpoint);
  double best = std::numeric_limits<double>::infinity();
  for (const auto& g : task.goal_viewpoints) best = std::min(best, dist[env.viewpoint_index(g)]);
  return best;
}

bool reverie_success(const Environment& env, const Task& task, const Trajectory& traj, const CameraIntrinsics& intr) {
  if (!traj.detection || traj.path.empty()) return false;
  const std::string& vp = traj.path.back();
  const auto& target = env.object(task.target_object);
  if (distance(env.viewpoint(vp).position, target.box.center) > kVisibilityRadius) return false;
  if (const auto* choice = std::get_if<CandidateChoice>(&*traj.detection)) return choice->object == task.target_object;
  const auto& out = std::get<BBoxOutput>(*traj.detection);
  if (out.view < 1 || out.view > kViewCount) return false;
  for (const auto& p : visible_objects(env, ViewState::from_index(vp, out.view), intr)) {
    if (p.object == task.target_object) return iou(out.bbox, p.bbox) >= 0.5;
  }
  return false;
}

TaskResult evaluate(const Environment& env, const Task& task, const Trajectory& traj, const CameraIntrinsics& intr) {
  if (traj.task_id != task.id) throw ValidationError("trajectory for " + traj.task_id + " scored against " + task.id);
  if (traj.path.empty() || traj.path.front() != task.start_viewpoint)
    throw ValidationError("trajectory for " + task.id + " does not start at " + task.start_viewpoint);
  TaskResult r;
  r.task_id = task.id;
  r.path_length = path_length(env, traj);
  r.shortest_length = shortest_length(env, task);
  r.nav_success = nav_success(env, task, traj, intr);
  r.oracle_success = r.nav_success || oracle_success(env, task, traj, intr);
  r.reverie_success = reverie_success(env, task, traj, intr);
  if (r.nav_success) {
    const double denom = std::max(r.shortest_length, r.path_length);
    r.spl_term = denom > 0.0 ? r.shortest_length / denom : 1.0;
  }
  return r;
}

double spl(const std::vector<TaskResult>& results) {
  if (results.empty()) throw std::invalid_argument("SPL over zero tasks");
  double sum = 0.0;
  for (const auto& r : results) sum += r.spl_term;
  return sum / static_cast<double>(results.size());
}

MetricsReport aggregate(std::vector<TaskResult> results) {
  if (results.empty()) throw std::invalid_argument("cannot aggregate zero tasks (N=0)");
  MetricsReport rep;
  const double n = static_cast<double>(results.size());
  auto& s = rep.summary;
  s.n = results.size();
  for (const auto& r : results) {
    s.success += r.nav_success;
    s.oracle_success += r.oracle_success;
    s.length += r.path_length;
    s.reverie_success += r.reverie_success;
  }
  s.success = 100.0 * s.success / n;
  s.oracle_success = 100.0 * s.oracle_success / n;
  s.reverie_success = 100.0 * s.reverie_success / n;
  s.length /= n;
  s.spl = 100.0 * spl(results);
  rep.results = std::move(results);
  return rep;
}

MetricsReport score(const std::vector<World>& suite, const std::vector<Trajectory>& trajectories,
                    const CameraIntrinsics& intr) {
  std::map<std::string, std::pair<const Environment*, const Task*>, std::less<>> index;
  for (const auto& w : suite) {
    for (const auto& t : w.tasks) index[t.id] = {&w.env, &t};
  }
  std::vector<TaskResult> results;
  results.reserve(trajectories.size());
  for (const auto& traj : trajectories) {
    auto it = index.find(traj.task_id);
    if (it == index.end()) throw ValidationError("trajectory references unknown task " + traj.task_id);
    results.push_back(evaluate(*it->second.first, *it->second.second, traj, intr));
  }
  return aggregate(std::move(results));
}

namespace {

std::string fixed2(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.2f", v);
  return buf;
}

}  // namespace

std::string render_table(const std::vector<ReportRow>& rows) {
  std::size_t name_w = 5;
  for (const auto& r : rows) name_w = std::max(name_w, r.first.size());
  std::ostringstream out;
  auto cell = [&](const std::string& s, std::size_t w) {
    out << std::string(w > s.size() ? w - s.size() : 0, ' ') << s;
  };
  out << "Agent" << std::string(name_w - 5, ' ');
  cell("N", 6);
  cell("Succ.", 9);
  cell("OSucc.", 9);
  cell("SPL", 9);
  cell("Length", 9);
  cell("REVERIE-Succ.", 15);
  out << "\n";
  for (const auto& [name, s] : rows) {
    out << name << std::string(name_w - name.size(), ' ');
    cell(std::to_string(s.n), 6);
    cell(fixed2(s.success), 9);
    cell(fixed2(s.oracle_success), 9);
    cell(fixed2(s.spl), 9);
    cell(fixed2(s.length), 9);
    cell(fixed2(s.reverie_success), 15);
    out << "\n";
  }
  return out.str();
}

std::string render_csv(const std::vector<ReportRow>& rows) {
  std::ostringstream out;
  out << "agent,n,succ,osucc,spl,length,reverie_succ\n";
  for (const auto& [name, s] : rows) {
    out << name << ',' << s.n << ',' << fixed2(s.success) << ',' << fixed2(s.oracle_success) << ',' << fixed2(s.spl)
        << ',' << fixed2(s.length) << ',' << fixed2(s.reverie_success) << "\n";
  }
  return out.str();
}

}  // namespace refnav
