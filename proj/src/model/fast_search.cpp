#include "refnav/model/fast_search.hpp"

#include <algorithm>
#include <limits>
#include <map>
#include <set>

namespace refnav::model {

StepCandidates gather_candidates(SceneCache& scene, PointerRanker& ranker, std::string_view vp, int heading_bin) {
  const Environment& env = scene.env();
  StepCandidates c;
  const int level = 1;
  c.targets.emplace_back(vp);
  c.heading_bins.push_back(heading_bin);
  c.views.push_back(ViewState{std::string(vp), heading_bin, level}.index());
  c.top.push_back(ranker.top_in_panorama(scene, vp));
  const std::size_t here = env.viewpoint_index(vp);
  const Vec3 p = env.viewpoints()[here].position;
  for (const Neighbor& nb : env.neighbors(here)) {
    const auto& w = env.viewpoints()[nb.index];
    const int bin = nearest_heading_index(heading_towards(p, w.position));
    const int k = ViewState{std::string(vp), bin, level}.index();
    c.targets.push_back(w.id);
    c.heading_bins.push_back(bin);
    c.views.push_back(k);
    c.top.push_back(ranker.top_in_view(scene, vp, k));
  }
  return c;
}

Var fuse_candidates(Tape& t, const NavPointModel& model, SceneCache& scene, const StepCandidates& c) {
  std::vector<Var> rows;
  for (std::size_t i = 0; i < c.targets.size(); ++i) {
    const Tensor2& base = scene.view_feature(c.targets[0], c.views[i]);
    rows.push_back(model.interaction_fuse(t, base, c.top[i]));
  }
  return nn::stack_rows(rows);
}

namespace {

struct Expansion {
  std::string vp;
  nn::LstmState ctx;  // context after this expansion's update
};

struct Entry {
  double score = 0.0;
  std::string vp;
  bool stop = false;
  std::size_t from = 0;  // expansion that proposed the entry
  int heading_bin = 0;   // heading of the move that reaches vp
  std::size_t order = 0;
};

// Max-heap order: higher score first, then smaller id, then stop, then older.
struct EntryLess {
  bool operator()(const Entry& a, const Entry& b) const {
    if (a.score != b.score) return a.score < b.score;
    if (a.vp != b.vp) return a.vp > b.vp;
    if (a.stop != b.stop) return !a.stop;
    return a.order > b.order;
  }
};

// Shortest walk from `from` to `to` using only known viewpoints.
std::vector<std::string> known_route(const Environment& env, const std::set<std::string>& known, const std::string& from,
                                     const std::string& to) {
  const std::size_t n = env.viewpoints().size();
  std::vector<double> dist(n, std::numeric_limits<double>::infinity());
  std::vector<std::size_t> prev(n, n);
  std::vector<bool> done(n, false);
  const std::size_t s = env.viewpoint_index(from), g = env.viewpoint_index(to);
  dist[s] = 0.0;
  for (std::size_t iter = 0; iter < n; ++iter) {
    std::size_t u = n;
    for (std::size_t i = 0; i < n; ++i) {
      if (!done[i] && dist[i] < std::numeric_limits<double>::infinity() && (u == n || dist[i] < dist[u])) u = i;
    }
    if (u == n || u == g) break;
    done[u] = true;
    for (const Neighbor& nb : env.neighbors(u)) {
      if (nb.index != g && !known.contains(env.viewpoints()[nb.index].id)) continue;
      if (dist[u] + nb.length < dist[nb.index]) {
        dist[nb.index] = dist[u] + nb.length;
        prev[nb.index] = u;
      }
    }
  }
  if (dist[g] == std::numeric_limits<double>::infinity()) return {};
  std::vector<std::string> route;
  for (std::size_t v = g; v != s; v = prev[v]) route.push_back(env.viewpoints()[v].id);
  std::reverse(route.begin(), route.end());
  return route;
}

}  // namespace

SearchTrace plan_fast_search(const NavPointModel& model, SceneCache& scene, const Task& task, int max_steps) {
  const Environment& env = scene.env();
  Tape t;
  PointerRanker ranker(model, task.instruction);
  Var X = model.encode_instruction(t, task.instruction);

  SearchTrace trace;
  std::vector<Expansion> expansions;
  std::vector<Entry> ending;
  std::vector<Entry> frontier;
  std::set<std::string> known;
  std::size_t order = 0;
  std::string here = task.start_viewpoint;
  int moves = 0;

  auto expand = [&](const std::string& vp, nn::LstmState prev, std::size_t action_index, int heading_bin, double acc) {
    StepCandidates c = gather_candidates(scene, ranker, vp, heading_bin);
    Var V = fuse_candidates(t, model, scene, c);
    CoGrounding cg = model.co_ground(X, V, prev.h);
    nn::LstmState ctx = model.context_update(prev, cg.x_hat, cg.v_hat, model.action_embedding(t, action_index));
    Var logits = model.action_logits_from_g(ctx.h, cg.x_hat, cg.g);
    const std::size_t id = expansions.size();
    expansions.push_back({vp, ctx});
    known.insert(vp);
    trace.expanded.push_back(vp);
    Entry stop{acc + logits.value()[0], vp, true, id, heading_bin, order++};
    ending.push_back(stop);
    frontier.push_back(stop);
    std::push_heap(frontier.begin(), frontier.end(), EntryLess{});
    for (std::size_t k = 1; k < c.targets.size(); ++k) {
      if (known.contains(c.targets[k])) continue;
      frontier.push_back({acc + logits.value()[k], c.targets[k], false, id, c.heading_bins[k], order++});
      std::push_heap(frontier.begin(), frontier.end(), EntryLess{});
    }
  };

  auto walk = [&](const std::vector<std::string>& route) {
    for (const auto& v : route) trace.actions.push_back(Move{v});
    moves += static_cast<int>(route.size());
    if (!route.empty()) here = route.back();
  };

  expand(task.start_viewpoint, model.initial_context(t), 0, nearest_heading_index(task.start_heading), 0.0);
  while (!frontier.empty()) {
    std::pop_heap(frontier.begin(), frontier.end(), EntryLess{});
    const Entry e = frontier.back();
    frontier.pop_back();
    if (e.stop) break;
    if (known.contains(e.vp)) continue;
    const auto route = known_route(env, known, here, e.vp);
    if (route.empty() || moves + static_cast<int>(route.size()) > max_steps) break;
    walk(route);
    expand(e.vp, expansions[e.from].ctx, 1 + static_cast<std::size_t>(e.heading_bin), e.heading_bin, e.score);
  }

  // Best stop entry still reachable within the budget; the current viewpoint always is.
  const Entry* best = nullptr;
  std::vector<std::string> best_route;
  for (const Entry& e : ending) {
    auto route = e.vp == here ? std::vector<std::string>{} : known_route(env, known, here, e.vp);
    if (e.vp != here && (route.empty() || moves + static_cast<int>(route.size()) > max_steps)) continue;
    if (!best || EntryLess{}(*best, e)) {
      best = &e;
      best_route = std::move(route);
    }
  }
  walk(best_route);
  trace.final_viewpoint = here;
  if (moves < max_steps) trace.actions.push_back(Stop{});
  trace.detection = ranker.best(scene, here);
  // With nothing visible the agent abstains: a Stop after navigation has finished.
  if (trace.detection) trace.actions.push_back(Detect{CandidateChoice{trace.detection->first}});
  else trace.actions.push_back(Stop{});
  return trace;
}

Trajectory fast_search(const NavPointModel& model, const Environment& env, const Task& task, int max_steps) {
  SceneCache scene(env, model.config());
  const SearchTrace plan = plan_fast_search(model, scene, task, max_steps);
  EngineConfig cfg;
  cfg.max_steps = max_steps;
  cfg.feature_dim = model.config().d_visual_base;
  return replay(env, task, plan.actions, cfg);
}

}  // namespace refnav::model
