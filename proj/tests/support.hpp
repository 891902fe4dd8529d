#pragma once

#include <string>
#include <vector>

#include "refnav/env.hpp"
#include "refnav/synth.hpp"

namespace refnav::testing {

inline OrientedBox3D cube(Vec3 center, double r) {
  OrientedBox3D b;
  b.center = center;
  b.radii = {r, r, r};
  return b;
}

inline ObjectAnnotation object(std::string id, std::string category, Vec3 center, double r = 0.2) {
  return {std::move(id), "a " + category, category, cube(center, r)};
}

inline Edge edge(const std::vector<Viewpoint>& vps, const std::string& a, const std::string& b) {
  Vec3 pa, pb;
  for (const auto& v : vps) {
    if (v.id == a) pa = v.position;
    if (v.id == b) pb = v.position;
  }
  return {a, b, distance(pa, pb)};
}

// a - b - c along +x at eye height, unit edges.
inline Environment chain_env(std::vector<ObjectAnnotation> objects = {}) {
  std::vector<Viewpoint> vps{{"a", {0, 0, 1.5}}, {"b", {1, 0, 1.5}}, {"c", {2, 0, 1.5}}};
  std::vector<Edge> edges{edge(vps, "a", "b"), edge(vps, "b", "c")};
  return Environment("chain", vps, edges, std::move(objects), 3);
}

// Five viewpoints 2 m apart along +x; a target cube sits 1 m beyond the last
// one, so only the last two viewpoints are within 3 m of it.
inline World corridor_world() {
  std::vector<Viewpoint> vps;
  for (int i = 0; i < 5; ++i) vps.push_back({"p" + std::to_string(i), {2.0 * i, 0, 1.5}});
  std::vector<Edge> edges;
  for (int i = 0; i + 1 < 5; ++i) edges.push_back(edge(vps, vps[i].id, vps[i + 1].id));
  std::vector<ObjectAnnotation> objs{object("t", "lamp", {9, 0, 1.5}, 0.3), object("u", "chair", {9, 1.5, 1.0}, 0.3),
                                     object("s", "sofa", {0, 2, 1.0}, 0.4)};
  Environment env("corridor", vps, edges, objs, 11);
  Task t;
  t.id = "corridor_t0";
  t.instruction = {"find", "the", "lamp"};
  t.start_viewpoint = "p0";
  t.target_object = "t";
  t.goal_viewpoints = {"p3", "p4"};
  return {std::move(env), {t}};
}

inline World synth_world(std::uint64_t seed, int vps = 20, int objs = 20) {
  SynthesisParams p;
  p.rng_seed = seed;
  p.n_viewpoints = vps;
  p.n_objects = objs;
  return generate_synthetic_world(p);
}

}  // namespace refnav::testing
