#include "refnav/agents.hpp"

#include <algorithm>
#include <set>
#include <stdexcept>

#include "refnav/model/fast_search.hpp"
#include "refnav/synth.hpp"

namespace refnav {

AgentKind parse_agent_kind(const std::string& name) {
  if (name == "random") return AgentKind::kRandom;
  if (name == "shortest") return AgentKind::kShortest;
  if (name == "stopnow") return AgentKind::kStopNow;
  if (name == "navpoint") return AgentKind::kNavPoint;
  throw std::invalid_argument("unknown agent '" + name + "' (random, shortest, stopnow, navpoint)");
}

std::string agent_name(const AgentConfig& cfg) {
  switch (cfg.kind) {
    case AgentKind::kRandom: return "Random";
    case AgentKind::kShortest: return cfg.ground_truth_pointer ? "Shortest" : "Shortest+Pointer";
    case AgentKind::kStopNow: return "StopNow";
    case AgentKind::kNavPoint:
      return cfg.model && cfg.model->config().lan_only ? "NavPoint-Lan-Only" : "NavPoint";
  }
  return "?";
}

RandomAgent::RandomAgent(std::uint64_t seed, int max_steps) : seed_(seed), max_steps_(max_steps) {
  if (max_steps < 1) throw std::invalid_argument("random agent needs max_steps >= 1");
}

void RandomAgent::begin(const Environment&, const Task& task) {
  rng_.seed(hash_combine(seed_, hash_string(task.id)));
  budget_ = 1 + static_cast<int>(uniform_index(rng_, static_cast<std::size_t>(max_steps_)));
  moves_ = 0;
  stopped_ = false;
}

Action RandomAgent::act(const Observation& obs) {
  if (!stopped_ && !obs.navigation_finished && moves_ < budget_ && !obs.navigable.empty()) {
    ++moves_;
    return Move{obs.navigable[uniform_index(rng_, obs.navigable.size())].viewpoint};
  }
  if (!stopped_ && !obs.navigation_finished) {
    stopped_ = true;
    return Stop{};
  }
  std::set<std::string> visible;
  for (const auto& v : obs.views) {
    for (const auto& c : v.candidates) visible.insert(c.object);
  }
  if (!visible.empty()) {
    auto it = visible.begin();
    std::advance(it, static_cast<std::ptrdiff_t>(uniform_index(rng_, visible.size())));
    return Detect{CandidateChoice{*it}};
  }
  const CameraIntrinsics intr;
  const int k = ViewState{obs.viewpoint, nearest_heading_index(obs.heading), 1}.index();
  return Detect{BBoxOutput{k, BBox2D{intr.width / 2.0, intr.height / 2.0, 1.0, 1.0}}};
}

ShortestAgent::ShortestAgent(std::shared_ptr<const model::NavPointModel> pointer) : pointer_(std::move(pointer)) {}

void ShortestAgent::begin(const Environment& env, const Task& task) {
  script_.clear();
  const std::string goal = nearest_goal(env, task);
  const Path path = shortest_path(env, task.start_viewpoint, goal);
  for (std::size_t i = 1; i < path.viewpoints.size(); ++i) script_.push_back(Move{path.viewpoints[i]});
  script_.push_back(Stop{});
  if (!pointer_) {
    script_.push_back(Detect{CandidateChoice{task.target_object}});
    return;
  }
  model::SceneCache scene(env, pointer_->config());
  model::PointerRanker ranker(*pointer_, task.instruction);
  if (auto best = ranker.best(scene, goal)) script_.push_back(Detect{CandidateChoice{best->first}});
  else script_.push_back(Stop{});
}

Action ShortestAgent::act(const Observation&) {
  if (script_.empty()) throw std::logic_error("shortest agent acted after its script ended");
  Action a = script_.front();
  script_.pop_front();
  return a;
}

Action StopNowAgent::act(const Observation&) {
  stopped_ = true;
  return Stop{};
}

NavPointAgent::NavPointAgent(std::shared_ptr<const model::NavPointModel> model) : model_(std::move(model)) {
  if (!model_) throw std::invalid_argument("NavPoint agent needs a model");
  max_steps_ = model_->config().max_steps;
}

void NavPointAgent::begin(const Environment& env, const Task& task) {
  auto& scene = scenes_[&env];
  if (!scene) scene = std::make_unique<model::SceneCache>(env, model_->config());
  const auto plan = model::plan_fast_search(*model_, *scene, task, max_steps_);
  script_.assign(plan.actions.begin(), plan.actions.end());
}

Action NavPointAgent::act(const Observation&) {
  if (script_.empty()) throw std::logic_error("NavPoint agent acted after its plan ended");
  Action a = script_.front();
  script_.pop_front();
  return a;
}

std::unique_ptr<Agent> make_agent(const AgentConfig& cfg) {
  switch (cfg.kind) {
    case AgentKind::kRandom: return std::make_unique<RandomAgent>(cfg.seed, cfg.max_random_steps);
    case AgentKind::kShortest:
      if (!cfg.ground_truth_pointer && !cfg.model) throw std::invalid_argument("model pointer requested without a model");
      return std::make_unique<ShortestAgent>(cfg.ground_truth_pointer ? nullptr : cfg.model);
    case AgentKind::kStopNow: return std::make_unique<StopNowAgent>();
    case AgentKind::kNavPoint: return std::make_unique<NavPointAgent>(cfg.model);
  }
  throw std::invalid_argument("unknown agent kind");
}

std::vector<BenchmarkRun> run_benchmark(const std::vector<World>& suite, const std::vector<AgentConfig>& agents,
                                        const EngineConfig& engine) {
  std::vector<BenchmarkRun> runs;
  for (const auto& cfg : agents) {
    BenchmarkRun run;
    run.agent = agent_name(cfg);
    auto agent = make_agent(cfg);
    for (const auto& w : suite) {
      auto t = run_agent(w.env, w.tasks, *agent, engine);
      run.trajectories.insert(run.trajectories.end(), t.begin(), t.end());
    }
    run.report = score(suite, run.trajectories, engine.intrinsics);
    runs.push_back(std::move(run));
  }
  return runs;
}

}  // namespace refnav
