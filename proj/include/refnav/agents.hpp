#pragma once

#include <cstdint>
#include <deque>
#include <map>
#include <memory>
#include <random>
#include <string>
#include <vector>

#include "refnav/episode.hpp"
#include "refnav/metrics.hpp"
#include "refnav/model/navpoint.hpp"

namespace refnav {

enum class AgentKind { kRandom, kShortest, kStopNow, kNavPoint };

struct AgentConfig {
  AgentKind kind = AgentKind::kShortest;
  std::uint64_t seed = 0;
  int max_random_steps = 10;
  /// Shortest only: detect with the ground-truth target instead of a model pointer.
  bool ground_truth_pointer = true;
  /// NavPoint, or Shortest with a model pointer.
  std::shared_ptr<const model::NavPointModel> model;
};

/// Parses "random", "shortest", "stopnow" or "navpoint". Throws std::invalid_argument.
AgentKind parse_agent_kind(const std::string& name);
std::string agent_name(const AgentConfig& cfg);

/// Walks uniformly random navigable edges for a per-task random number of
/// steps in 1..max_steps, stops, and names a uniformly random visible object
/// (or a 1x1 box at the image center of the current view when none is visible).
class RandomAgent : public Agent {
 public:
  explicit RandomAgent(std::uint64_t seed, int max_steps = 10);
  void begin(const Environment& env, const Task& task) override;
  Action act(const Observation& obs) override;

 private:
  std::uint64_t seed_;
  int max_steps_;
  std::mt19937_64 rng_;
  int budget_ = 0;
  int moves_ = 0;
  bool stopped_ = false;
};

/// Follows the shortest path to the nearest goal viewpoint, stops, and
/// detects through the ground-truth target or a model pointer.
class ShortestAgent : public Agent {
 public:
  explicit ShortestAgent(std::shared_ptr<const model::NavPointModel> pointer = nullptr);
  void begin(const Environment& env, const Task& task) override;
  Action act(const Observation& obs) override;

 private:
  std::shared_ptr<const model::NavPointModel> pointer_;
  std::deque<Action> script_;
};

/// Stops at once and abstains from detection.
class StopNowAgent : public Agent {
 public:
  void begin(const Environment&, const Task&) override { stopped_ = false; }
  Action act(const Observation&) override;

 private:
  bool stopped_ = false;
};

/// The trained Navigator-Pointer: plans with queue search when the episode
/// begins and then plays the plan back.
class NavPointAgent : public Agent {
 public:
  explicit NavPointAgent(std::shared_ptr<const model::NavPointModel> model);
  void begin(const Environment& env, const Task& task) override;
  Action act(const Observation& obs) override;

 private:
  std::shared_ptr<const model::NavPointModel> model_;
  std::map<const Environment*, std::unique_ptr<model::SceneCache>> scenes_;
  std::deque<Action> script_;
  int max_steps_ = 40;
};

std::unique_ptr<Agent> make_agent(const AgentConfig& cfg);

struct BenchmarkRun {
  std::string agent;
  std::vector<Trajectory> trajectories;
  MetricsReport report;
};

/// Runs each agent over every task of the suite and scores it.
std::vector<BenchmarkRun> run_benchmark(const std::vector<World>& suite, const std::vector<AgentConfig>& agents,
                                        const EngineConfig& engine = {});

}  // namespace refnav
