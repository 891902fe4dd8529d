#include "refnav/scene.hpp"

#include <algorithm>
#include <sstream>
#include <stdexcept>

namespace refnav {

std::vector<ProjectedObject> visible_objects(const Environment& env, const ViewState& state,
                                             const CameraIntrinsics& intr) {
  const Vec3 pos = env.viewpoint(state.viewpoint).position;
  const CameraPose pose = camera_pose(pos, state.heading(), state.elevation());
  std::vector<ProjectedObject> projs;
  for (const ObjectAnnotation* o : objects_near(env, state.viewpoint)) {
    if (auto p = project_box(o->box, pose, intr)) projs.push_back({o->id, p->bbox, p->depth, state});
  }
  auto visible = occlusion_filter(projs);
  std::sort(visible.begin(), visible.end(), [](const ProjectedObject& a, const ProjectedObject& b) {
    if (a.depth != b.depth) return a.depth < b.depth;
    return a.object < b.object;
  });
  return visible;
}

Panorama panorama(const Environment& env, std::string_view vp, const CameraIntrinsics& intr) {
  Panorama pano;
  const std::string id(vp);
  for (int k = 1; k <= kViewCount; ++k) pano[k - 1] = visible_objects(env, ViewState::from_index(id, k), intr);
  return pano;
}

bool object_visible_from(const Environment& env, std::string_view vp, std::string_view object,
                         const CameraIntrinsics& intr) {
  const auto& target = env.object(object);
  if (distance(env.viewpoint(vp).position, target.box.center) > kVisibilityRadius) return false;
  const std::string id(vp);
  for (int k = 1; k <= kViewCount; ++k) {
    for (const auto& p : visible_objects(env, ViewState::from_index(id, k), intr)) {
      if (p.object == object) return true;
    }
  }
  return false;
}

std::uint64_t hash_string(std::string_view s) {
  std::uint64_t h = 14695981039346656037ULL;
  for (unsigned char c : s) {
    h ^= c;
    h *= 1099511628211ULL;
  }
  return h;
}

namespace {

std::uint64_t splitmix(std::uint64_t& state) {
  std::uint64_t z = (state += 0x9E3779B97F4A7C15ULL);
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

void normalize(std::vector<double>& v, double target_norm) {
  double n = 0.0;
  for (double x : v) n += x * x;
  n = std::sqrt(n);
  if (n == 0.0) return;
  for (double& x : v) x *= target_norm / n;
}

std::vector<std::string> split_words(std::string_view s) {
  std::istringstream in{std::string(s)};
  std::vector<std::string> words;
  for (std::string w; in >> w;) words.push_back(w);
  return words;
}

}  // namespace

std::uint64_t hash_combine(std::uint64_t a, std::uint64_t b) {
  std::uint64_t state = a ^ (b + 0x9E3779B97F4A7C15ULL + (a << 6) + (a >> 2));
  return splitmix(state);
}

std::vector<double> hash_unit_vector(std::uint64_t seed, std::size_t n) {
  std::vector<double> v(n);
  std::uint64_t state = seed;
  for (double& x : v) x = static_cast<double>(splitmix(state) >> 11) * 0x1.0p-53 * 2.0 - 1.0;
  normalize(v, 1.0);
  return v;
}

std::vector<double> category_embedding(std::string_view category, std::size_t dim) {
  return hash_unit_vector(hash_combine(hash_string("category"), hash_string(category)), dim);
}

std::vector<double> view_feature(const Environment& env, const ViewState& state, std::size_t dim,
                                 const CameraIntrinsics& intr) {
  return view_feature(env, state, visible_objects(env, state, intr), dim);
}

std::vector<double> view_feature(const Environment& env, const ViewState& state,
                                 const std::vector<ProjectedObject>& visible, std::size_t dim) {
  if (dim < 8) throw std::invalid_argument("view_feature dim must be at least 8");
  const std::size_t half = dim / 2;
  const std::uint64_t seed = hash_combine(
      hash_combine(env.feature_seed(), hash_string(state.viewpoint)), static_cast<std::uint64_t>(state.index()));
  std::vector<double> out = hash_unit_vector(seed, half);
  for (double& x : out) x *= 0.5;
  std::vector<double> bag(dim - half, 0.0);
  for (const auto& p : visible) {
    const auto e = category_embedding(env.object(p.object).category, dim - half);
    for (std::size_t i = 0; i < bag.size(); ++i) bag[i] += e[i];
  }
  normalize(bag, 1.0);
  out.insert(out.end(), bag.begin(), bag.end());
  return out;
}

std::vector<double> object_base_embedding(const Environment& env, std::string_view object, std::size_t dim) {
  const auto& o = env.object(object);
  std::vector<double> base = category_embedding(o.category, dim);
  for (const auto& word : split_words(o.label)) {
    if (word == o.category) continue;
    const auto a = hash_unit_vector(hash_combine(hash_string("attribute"), hash_string(word)), dim);
    for (std::size_t i = 0; i < dim; ++i) base[i] += 0.6 * a[i];
  }
  const auto id = hash_unit_vector(hash_combine(env.feature_seed(), hash_string(o.id)), dim);
  for (std::size_t i = 0; i < dim; ++i) base[i] += 0.3 * id[i];
  normalize(base, 1.0);
  return base;
}

std::vector<std::vector<double>> object_feature(const Environment& env, std::string_view object, int grid,
                                                std::size_t dim) {
  if (grid < 1) throw std::invalid_argument("object_feature grid must be at least 1");
  const auto& o = env.object(object);
  const auto base = object_base_embedding(env, object, dim);
  const std::uint64_t seed =
      hash_combine(hash_combine(env.feature_seed(), hash_string(o.id)), hash_string(o.category));
  std::vector<std::vector<double>> cells;
  cells.reserve(static_cast<std::size_t>(grid) * grid);
  for (int r = 0; r < grid; ++r) {
    for (int c = 0; c < grid; ++c) {
      const double u = (c + 0.5) / grid;
      const double v = (r + 0.5) / grid;
      // 0 at the center cell, 1 at the far corners.
      const double radial = std::sqrt((u - 0.5) * (u - 0.5) + (v - 0.5) * (v - 0.5)) / std::sqrt(0.5);
      std::vector<double> cell = base;
      if (radial > 0.0) {
        const auto bits = static_cast<std::uint64_t>(std::llround(u * 1e6)) * 1000003ULL +
                          static_cast<std::uint64_t>(std::llround(v * 1e6));
        const auto noise = hash_unit_vector(hash_combine(seed, bits), dim);
        for (std::size_t i = 0; i < dim; ++i) cell[i] += 0.5 * radial * noise[i];
      }
      cells.push_back(std::move(cell));
    }
  }
  return cells;
}

}  // namespace refnav
