#pragma once

#include <iosfwd>
#include <optional>
#include <random>
#include <stdexcept>
#include <string>
#include <vector>

#include "refnav/env.hpp"
#include "refnav/model/losses.hpp"
#include "refnav/model/navpoint.hpp"

namespace refnav::model {

class TrainingError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct EpochRecord {
  int phase = 1;  // 1 pointer, 2 navigator with interaction
  int epoch = 0;  // 1-based within the phase
  double loss = 0.0;
  double seconds = 0.0;
};

struct TrainReport {
  std::vector<EpochRecord> curve;
};

/// Pointer triplet for one task: the target in a randomly chosen goal view,
/// scored against the task's own instruction, another task's instruction,
/// and another object of the same view. Returns nothing if the target is
/// never visible (cannot happen for a valid task).
std::optional<Var> pointer_task_loss(Tape& t, const NavPointModel& model, SceneCache& scene, const World& world,
                                     std::size_t task_index, std::mt19937_64& rng);

/// Teacher-forced navigator loss along the shortest path to the nearest goal;
/// pointer ranking inside the fused features carries no gradient. A non-empty
/// `start` replaces the task's start viewpoint (heading is kept).
Var navigator_task_loss(Tape& t, const NavPointModel& model, SceneCache& scene, const Task& task,
                        std::string_view start = {});

/// Two phases: pointer_epochs of loss_exp on goal views, then nav_epochs of
/// loss_total with interaction fusion. In phase 2 each task also adds
/// nav_extra_starts navigator losses from uniformly drawn viewpoints. Plain SGD with clipping, tasks
/// shuffled per epoch from the config seed. Throws TrainingError when a loss
/// turns non-finite.
TrainReport train(NavPointModel& model, const std::vector<World>& worlds, std::ostream* log = nullptr);

/// phase,epoch,loss CSV with a header row.
std::string loss_curve_csv(const TrainReport& report);

}  // namespace refnav::model
