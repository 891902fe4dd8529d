#pragma once

#include <string>
#include <vector>

#include "refnav/episode.hpp"
#include "refnav/model/navpoint.hpp"

namespace refnav::model {

/// Navigable candidates at a viewpoint: entry 0 is the current viewpoint
/// (stop), then graph neighbours in id order. Each candidate is seen through
/// the level view facing it; the stop candidate uses the current view for its
/// base feature and the whole panorama for its top objects.
struct StepCandidates {
  std::vector<std::string> targets;
  std::vector<int> heading_bins;  // heading bin of the move towards each target; entry 0 is the current heading
  std::vector<int> views;         // view index k of each candidate's base feature
  std::vector<std::vector<const ObjectCandidate*>> top;
};

StepCandidates gather_candidates(SceneCache& scene, PointerRanker& ranker, std::string_view vp, int heading_bin);
/// Stacked fused features V', K x d_fused.
Var fuse_candidates(Tape& t, const NavPointModel& model, SceneCache& scene, const StepCandidates& c);

struct SearchTrace {
  std::vector<Action> actions;
  std::vector<std::string> expanded;  // viewpoints in expansion order
  std::string final_viewpoint;
  std::optional<std::pair<std::string, int>> detection;  // (object, view) chosen by the pointer
};

/// Queue search with backtracking. A single frontier holds move and stop
/// entries keyed by accumulated raw logit (ties: smaller viewpoint id, then
/// stop before move). Popping a move expands its viewpoint after walking
/// there over already-known edges; popping a stop entry ends the search, as
/// do an empty frontier or an exhausted step budget. The agent then walks to
/// the best-scoring stop entry it can still reach, stops, and names the
/// pointer's best object there (or abstains when nothing is visible).
SearchTrace plan_fast_search(const NavPointModel& model, SceneCache& scene, const Task& task, int max_steps);

/// plan_fast_search replayed through a fresh episode.
Trajectory fast_search(const NavPointModel& model, const Environment& env, const Task& task, int max_steps);

}  // namespace refnav::model
