#pragma once

// Triangle world a-b-c with four objects. The task walks a -> b and stops,
// so the teacher-forced episode has two steps with three candidates each
// (stop plus two neighbours).

#include <random>

#include "refnav/model/losses.hpp"
#include "refnav/model/navpoint.hpp"
#include "refnav/model/train.hpp"
#include "refnav/nn/grad_check.hpp"

namespace refnav::toy {

inline ObjectAnnotation toy_object(std::string id, std::string label, std::string category, Vec3 c, double r) {
  OrientedBox3D b;
  b.center = c;
  b.radii = {r, r, r};
  return {std::move(id), std::move(label), std::move(category), b};
}

inline World triangle_world() {
  std::vector<Viewpoint> vps{{"a", {0, 0, 1.5}}, {"b", {4, 0, 1.5}}, {"c", {2, 3, 1.5}}};
  auto len = [&](int i, int j) { return distance(vps[i].position, vps[j].position); };
  std::vector<Edge> edges{{"a", "b", len(0, 1)}, {"a", "c", len(0, 2)}, {"b", "c", len(1, 2)}};
  std::vector<ObjectAnnotation> objs{
      toy_object("t", "brass lamp", "lamp", {6.5, 0, 1.2}, 0.2),
      toy_object("u", "green chair", "chair", {6.5, 1.2, 1.0}, 0.25),
      toy_object("s", "grey sofa", "sofa", {-2, 0, 1.0}, 0.4),
      toy_object("v", "oak table", "table", {2, 5, 1.0}, 0.4),
  };
  Environment env("toy", vps, edges, objs, 5);
  Task t1{"toy_t0", {"go", "to", "the", "brass", "lamp"}, "a", 0.0, 0.0, "t", {"b"}};
  Task t2{"toy_t1", {"find", "the", "green", "chair"}, "a", 0.0, 0.0, "u", {"b"}};
  return {std::move(env), {t1, t2}};
}

inline model::ModelConfig tiny_config() {
  model::ModelConfig c;
  c.d_word = 5;
  c.d_text = 4;
  c.d_visual_base = 8;
  c.d_label = 4;
  c.d_obj = 4;
  c.d_g = 4;
  c.d_hidden = 4;
  c.d_action = 3;
  c.d_pword = 4;
  c.d_pstate = 3;
  c.d_f_hidden = 4;
  c.d_f_out = 3;
  c.d_loc = 3;
  c.d_label_word = 3;
  c.grid = 2;
  return c;
}

inline std::unique_ptr<model::NavPointModel> toy_model(const World& w, std::uint64_t seed = 3) {
  auto m = std::make_unique<model::NavPointModel>(tiny_config(), model::Vocabulary::from_worlds({w}));
  m->params().init_xavier(seed);
  // small nonzero biases so every bias gradient is exercised
  std::mt19937_64 rng(seed + 100);
  for (const auto& p : m->params().params()) {
    if (p->name.ends_with(".b")) {
      for (double& x : p->value.data) x = 0.1 * (2.0 * static_cast<double>(rng() >> 11) * 0x1.0p-53 - 1.0);
    }
  }
  return m;
}

struct ToyLoss {
  double nav = 0.0;
  double exp = 0.0;
  double total = 0.0;
};

// loss_total = loss_nav + lambda4 * loss_exp on the toy episode. The pointer
// triplet is drawn from a fixed seed so every evaluation sees the same pairs.
inline nn::Var toy_loss(nn::Tape& t, const model::NavPointModel& m, model::SceneCache& scene, const World& w,
                        ToyLoss* parts = nullptr) {
  std::mt19937_64 rng(17);
  auto exp = model::pointer_task_loss(t, m, scene, w, 0, rng);
  nn::Var nav = model::navigator_task_loss(t, m, scene, w.tasks[0]);
  nn::Var total = model::loss_total(nav, *exp, m.config().lambda4);
  if (parts) *parts = {nav.item(), exp->item(), total.item()};
  return total;
}

}  // namespace refnav::toy
