#pragma once

#include <chrono>
#include <memory>
#include <optional>
#include <stdexcept>
#include <string>
#include <variant>
#include <vector>

#include "refnav/env.hpp"
#include "refnav/geometry.hpp"
#include "refnav/scene.hpp"

namespace refnav {

struct BBoxOutput {
  int view = 1;  // k in 1..36 at the detection viewpoint
  BBox2D bbox;
  friend bool operator==(const BBoxOutput&, const BBoxOutput&) = default;
};

struct CandidateChoice {
  std::string object;
  friend bool operator==(const CandidateChoice&, const CandidateChoice&) = default;
};

using Detection = std::variant<BBoxOutput, CandidateChoice>;

struct Move {
  std::string viewpoint;
  friend bool operator==(const Move&, const Move&) = default;
};
struct Stop {
  friend bool operator==(const Stop&, const Stop&) = default;
};
struct Detect {
  Detection detection;
  friend bool operator==(const Detect&, const Detect&) = default;
};

using Action = std::variant<Move, Stop, Detect>;

struct EngineConfig {
  int max_steps = 40;
  std::size_t feature_dim = 32;
  CameraIntrinsics intrinsics;
};

struct ViewObservation {
  ViewState state;
  std::vector<double> feature;
  std::vector<ProjectedObject> candidates;
};

struct NavigableViewpoint {
  std::string viewpoint;
  double rel_heading = 0.0;    // radians in (-pi, pi], relative to the current heading
  double rel_elevation = 0.0;  // radians, relative to the current elevation
  double distance = 0.0;       // meters
};

struct Observation {
  std::string viewpoint;
  double heading = 0.0;
  double elevation = 0.0;
  int step = 0;
  bool navigation_finished = false;
  std::vector<std::string> instruction;
  std::vector<ViewObservation> views;  // 36 entries, views[k-1] is view k
  std::vector<NavigableViewpoint> navigable;
};

struct EpisodeState {
  Task task;
  std::string current_viewpoint;
  double heading = 0.0;
  double elevation = 0.0;
  int step_count = 0;
  bool navigation_finished = false;
  bool done = false;
  std::optional<Detection> detection;
  std::vector<std::string> path;
  std::vector<Action> actions;
};

struct Trajectory {
  std::string task_id;
  std::vector<std::string> path;
  std::vector<Action> actions;
  std::optional<Detection> detection;
  int steps = 0;
  double wall_time_s = 0.0;  // not serialized

  /// Equality on everything except wall time.
  friend bool operator==(const Trajectory& a, const Trajectory& b) {
    return a.task_id == b.task_id && a.path == b.path && a.actions == b.actions && a.detection == b.detection &&
           a.steps == b.steps;
  }
};

class EpisodeError : public std::runtime_error {
 public:
  enum class Kind { kInvalidTask, kIllegalMove, kAfterDone, kSecondDetection, kInvalidDetection, kStepLimit };
  EpisodeError(Kind kind, const std::string& what) : std::runtime_error(what), kind_(kind) {}
  Kind kind() const { return kind_; }

 private:
  Kind kind_;
};

/// One live task. Starts at the task's start pose; Move walks the graph,
/// Stop (or Move to the current viewpoint, or reaching max_steps) finishes
/// navigation, and a single Detect records the answer and ends the episode.
/// Stop after navigation has finished ends the episode without a detection.
/// Detect is accepted at any point before the episode is done.
class Episode {
 public:
  Episode(const Environment& env, Task task, EngineConfig config = {});

  const EpisodeState& state() const { return state_; }
  const Environment& environment() const { return *env_; }
  const EngineConfig& config() const { return config_; }
  Observation observe() const;

  /// Applies one action. Returns the next observation, or nothing once the
  /// episode is done. Throws EpisodeError on protocol violations and leaves
  /// the state untouched in that case.
  std::optional<Observation> step(const Action& action);

  Trajectory trajectory() const;

 private:
  const Panorama& current_panorama() const;

  const Environment* env_;
  EngineConfig config_;
  EpisodeState state_;
  std::chrono::steady_clock::time_point started_;
  mutable std::optional<Panorama> pano_;
};

/// Convenience mirror of the functional form: fresh episode plus its first observation.
std::pair<Episode, Observation> start_episode(const Environment& env, const Task& task, EngineConfig config = {});

class Agent {
 public:
  virtual ~Agent() = default;
  virtual void begin(const Environment& env, const Task& task) = 0;
  virtual Action act(const Observation& obs) = 0;
};

/// Runs one episode per task. Step errors are rethrown with the task id prefixed.
std::vector<Trajectory> run_agent(const Environment& env, const std::vector<Task>& tasks, Agent& agent,
                                  const EngineConfig& config = {});

/// Feeds a recorded action list back through a fresh episode.
Trajectory replay(const Environment& env, const Task& task, const std::vector<Action>& actions,
                  const EngineConfig& config = {});

// Trajectory JSON-lines submission format: one object per task with keys
// task_id, path, actions, detection, steps.
std::string trajectory_to_json_line(const Trajectory& t);
/// Throws ParseError naming the 1-based line number of the first malformed line.
std::vector<Trajectory> parse_trajectories(std::string_view text);

std::string describe(const Action& a);

}  // namespace refnav
