#pragma once

#include <string>
#include <utility>
#include <vector>

#include "refnav/env.hpp"
#include "refnav/episode.hpp"

namespace refnav {

struct TaskResult {
  std::string task_id;
  bool nav_success = false;
  bool oracle_success = false;
  bool reverie_success = false;
  double path_length = 0.0;      // p_i, meters
  double shortest_length = 0.0;  // l_i, meters
  double spl_term = 0.0;         // S_i * l_i / max(l_i, p_i)
};

/// Aggregates in percent (length in meters), arithmetic means over n tasks.
struct MetricsSummary {
  std::size_t n = 0;
  double success = 0.0;
  double oracle_success = 0.0;
  double spl = 0.0;
  double length = 0.0;
  double reverie_success = 0.0;
};

struct MetricsReport {
  std::vector<TaskResult> results;
  MetricsSummary summary;
};

/// Target within 3 m of the viewpoint and visible in at least one of its 36 views.
bool target_observable(const Environment& env, const Task& task, std::string_view viewpoint,
                       const CameraIntrinsics& intr = {});

bool nav_success(const Environment& env, const Task& task, const Trajectory& traj, const CameraIntrinsics& intr = {});
bool oracle_success(const Environment& env, const Task& task, const Trajectory& traj,
                    const CameraIntrinsics& intr = {});
/// Sum of traversed edge lengths. Throws ValidationError on a non-adjacent hop.
double path_length(const Environment& env, const Trajectory& traj);
/// Shortest path length from the start to the nearest goal viewpoint.
double shortest_length(const Environment& env, const Task& task);
bool reverie_success(const Environment& env, const Task& task, const Trajectory& traj,
                     const CameraIntrinsics& intr = {});

/// Checks the trajectory against the task (start, adjacency) and scores it.
TaskResult evaluate(const Environment& env, const Task& task, const Trajectory& traj,
                    const CameraIntrinsics& intr = {});

/// Mean SPL ratio in [0, 1]. Throws std::invalid_argument for an empty set.
double spl(const std::vector<TaskResult>& results);

/// Throws std::invalid_argument for an empty set.
MetricsReport aggregate(std::vector<TaskResult> results);

/// Scores trajectories against a suite, matching each by task id.
MetricsReport score(const std::vector<World>& suite, const std::vector<Trajectory>& trajectories,
                    const CameraIntrinsics& intr = {});

using ReportRow = std::pair<std::string, MetricsSummary>;
/// Aligned text table: rows are agents, columns Succ./OSucc./SPL/Length/REVERIE-Succ.
std::string render_table(const std::vector<ReportRow>& rows);
std::string render_csv(const std::vector<ReportRow>& rows);

}  // namespace refnav
