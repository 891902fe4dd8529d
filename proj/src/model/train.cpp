#include "refnav/model/train.hpp"

#include <algorithm>
#include <chrono>
#include <limits>
#include <cmath>
#include <cstdio>
#include <memory>
#include <ostream>

#include "refnav/model/fast_search.hpp"
#include "refnav/synth.hpp"

namespace refnav::model {

std::optional<Var> pointer_task_loss(Tape& t, const NavPointModel& model, SceneCache& scene, const World& world,
                                     std::size_t task_index, std::mt19937_64& rng) {
  const Task& task = world.tasks[task_index];
  std::vector<std::pair<std::string, int>> views;
  for (const auto& g : task.goal_viewpoints) {
    const Panorama& pano = scene.panorama(g);
    for (int k = 1; k <= kViewCount; ++k) {
      for (const auto& p : pano[static_cast<std::size_t>(k - 1)]) {
        if (p.object == task.target_object) views.emplace_back(g, k);
      }
    }
  }
  if (views.empty()) return std::nullopt;
  const auto& [vp, k] = views[uniform_index(rng, views.size())];
  const auto& objs = scene.objects(vp, k);
  const ObjectCandidate* target = nullptr;
  std::vector<const ObjectCandidate*> others;
  for (const auto& o : objs) {
    if (o.object == task.target_object) target = &o;
    else others.push_back(&o);
  }
  std::vector<const Task*> foils;
  const std::string& label = world.env.object(task.target_object).label;
  for (const auto& other : world.tasks) {
    if (world.env.object(other.target_object).label != label) foils.push_back(&other);
  }

  PointerQuery q = model.pointer_encode(t, task.instruction);
  PointerTriplet tr;
  tr.positive = model.pointer_score(q, *target).total;
  if (!foils.empty()) {
    const Task* foil = foils[uniform_index(rng, foils.size())];
    tr.other_expression = model.pointer_score(model.pointer_encode(t, foil->instruction), *target).total;
  }
  if (!others.empty()) tr.other_object = model.pointer_score(q, *others[uniform_index(rng, others.size())]).total;
  const auto& cfg = model.config();
  return loss_exp(t, std::span<const PointerTriplet>(&tr, 1), cfg.lambda2, cfg.lambda3, cfg.margin);
}

Var navigator_task_loss(Tape& t, const NavPointModel& model, SceneCache& scene, const Task& task,
                        std::string_view start) {
  const Environment& env = scene.env();
  Task from = task;
  if (!start.empty()) from.start_viewpoint = std::string(start);
  const Path path = shortest_path(env, from.start_viewpoint, nearest_goal(env, from));
  // Remaining distance to the nearest goal from every viewpoint.
  std::vector<double> remaining(env.viewpoints().size(), std::numeric_limits<double>::infinity());
  for (const auto& g : task.goal_viewpoints) {
    const auto dg = distances_from(env, g);
    for (std::size_t i = 0; i < dg.size(); ++i) remaining[i] = std::min(remaining[i], dg[i]);
  }
  const double d0 = remaining[env.viewpoint_index(from.start_viewpoint)];

  PointerRanker ranker(model, task.instruction);
  Var X = model.encode_instruction(t, task.instruction);
  nn::LstmState ctx = model.initial_context(t);
  std::size_t action_index = 0;
  int heading_bin = nearest_heading_index(task.start_heading);
  std::vector<NavStep> steps;
  for (std::size_t i = 0; i < path.viewpoints.size(); ++i) {
    const std::string& vp = path.viewpoints[i];
    StepCandidates c = gather_candidates(scene, ranker, vp, heading_bin);
    Var V = fuse_candidates(t, model, scene, c);
    CoGrounding cg = model.co_ground(X, V, ctx.h);
    ctx = model.context_update(ctx, cg.x_hat, cg.v_hat, model.action_embedding(t, action_index));
    NavStep s;
    s.logits = model.action_logits_from_g(ctx.h, cg.x_hat, cg.g);
    s.progress = model.progress_monitor(ctx.h, cg.x_hat);
    s.progress_target = progress_target(d0, remaining[env.viewpoint_index(vp)]);
    s.teacher = 0;
    if (i + 1 < path.viewpoints.size()) {
      const auto it = std::find(c.targets.begin() + 1, c.targets.end(), path.viewpoints[i + 1]);
      s.teacher = static_cast<std::size_t>(it - c.targets.begin());
      heading_bin = c.heading_bins[s.teacher];
      action_index = 1 + static_cast<std::size_t>(heading_bin);
    }
    steps.push_back(s);
  }
  return loss_nav(steps, model.config().lambda1);
}

namespace {

struct TaskRef {
  std::size_t world;
  std::size_t task;
};

double elapsed(std::chrono::steady_clock::time_point since) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - since).count();
}

void check_finite(double loss, int phase, int epoch, const std::string& task) {
  if (!std::isfinite(loss))
    throw TrainingError("non-finite loss in phase " + std::to_string(phase) + ", epoch " + std::to_string(epoch) +
                        ", task " + task);
}

}  // namespace

TrainReport train(NavPointModel& model, const std::vector<World>& worlds, std::ostream* log) {
  const ModelConfig& cfg = model.config();
  std::vector<std::unique_ptr<SceneCache>> scenes;
  std::vector<TaskRef> refs;
  for (std::size_t w = 0; w < worlds.size(); ++w) {
    scenes.push_back(std::make_unique<SceneCache>(worlds[w].env, cfg));
    for (std::size_t i = 0; i < worlds[w].tasks.size(); ++i) refs.push_back({w, i});
  }
  if (refs.empty()) throw std::invalid_argument("training set has no tasks");

  TrainReport report;
  std::mt19937_64 rng(hash_combine(cfg.seed, 0x7261696eULL));
  auto run_phase = [&](int phase, int epochs) {
    for (int epoch = 1; epoch <= epochs; ++epoch) {
      const auto started = std::chrono::steady_clock::now();
      for (std::size_t i = refs.size(); i > 1; --i) std::swap(refs[i - 1], refs[uniform_index(rng, i)]);
      double total = 0.0;
      for (const TaskRef& r : refs) {
        const World& world = worlds[r.world];
        SceneCache& scene = *scenes[r.world];
        Tape t;
        std::optional<Var> loss = pointer_task_loss(t, model, scene, world, r.task, rng);
        if (phase == 2) {
          Var nav = navigator_task_loss(t, model, scene, world.tasks[r.task]);
          const auto& vps = world.env.viewpoints();
          for (int extra = 0; extra < cfg.nav_extra_starts; ++extra)
            nav = nav + navigator_task_loss(t, model, scene, world.tasks[r.task], vps[uniform_index(rng, vps.size())].id);
          loss = loss ? loss_total(nav, *loss, cfg.lambda4) : nav;
        }
        if (!loss) continue;
        const double value = loss->item();
        check_finite(value, phase, epoch, world.tasks[r.task].id);
        total += value;
        model.params().zero_grad();
        t.backward(*loss);
        model.params().sgd_step(cfg.lr, cfg.clip_norm);
      }
      EpochRecord rec{phase, epoch, total / static_cast<double>(refs.size()), elapsed(started)};
      report.curve.push_back(rec);
      if (log) {
        char line[128];
        std::snprintf(line, sizeof line, "phase %d epoch %d loss %.6f (%.1fs)\n", phase, epoch, rec.loss, rec.seconds);
        *log << line << std::flush;
      }
    }
  };
  run_phase(1, cfg.pointer_epochs);
  run_phase(2, cfg.nav_epochs);
  return report;
}

std::string loss_curve_csv(const TrainReport& report) {
  std::string out = "phase,epoch,loss\n";
  char line[96];
  for (const auto& r : report.curve) {
    std::snprintf(line, sizeof line, "%d,%d,%.9f\n", r.phase, r.epoch, r.loss);
    out += line;
  }
  return out;
}

}  // namespace refnav::model
