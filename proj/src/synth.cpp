#include "refnav/synth.hpp"

#include <algorithm>
#include <cmath>
#include <iomanip>
#include <set>
#include <sstream>
#include <tuple>

#include "refnav/scene.hpp"

namespace refnav {

namespace {

constexpr double kCameraHeight = 1.5;
constexpr double kMinViewpointSpacing = 1.0;
constexpr double kIntraRoomLink = 2.8;
constexpr int kMaxAttempts = 20;

// Interleaved so that any prefix covers the room types evenly: entry i is
// typical of room type i % 8.
const std::vector<std::string> kCategories = {
    "oven",     "bed",        "toilet",  "desk",      "sofa",       "picture", "washer",   "table",
    "sink",     "pillow",     "towel",   "monitor",   "cushion",    "clock",   "dryer",    "vase",
    "fridge",   "wardrobe",   "mirror",  "keyboard",  "television", "bench",   "basket",   "candle",
    "kettle",   "lamp",       "bathtub", "bookshelf", "rug",        "plant",   "iron",     "plate",
    "toaster",  "nightstand", "shower",  "printer",   "fireplace",  "coatrack", "hanger",  "sideboard",
    "microwave", "blanket",   "soap",    "chair",     "armchair",   "umbrella", "detergent", "chandelier"};

const std::vector<std::string> kRooms = {"kitchen", "bedroom", "bathroom", "office",
                                         "lounge",  "hallway", "laundry",  "den"};

const std::vector<std::string> kAttributes = {"red",    "blue",  "white", "black",
                                              "wooden", "small", "large", "green"};

const std::vector<std::string> kVerbs = {"clean", "bring", "dust", "wipe", "check", "move", "fix", "polish"};

std::string padded(char prefix, std::size_t i) {
  std::ostringstream ss;
  ss << prefix << std::setw(3) << std::setfill('0') << i;
  return ss.str();
}

struct Room {
  int type = 0;
  double x0 = 0.0;
  double y0 = 0.0;
  std::vector<std::size_t> viewpoints;
  std::vector<std::size_t> objects;
};

struct Draft {
  std::vector<Room> rooms;
  std::vector<Viewpoint> viewpoints;
  std::vector<int> vp_room;
  std::vector<ObjectAnnotation> objects;
  std::vector<int> obj_room;
  std::vector<std::string> obj_attr;
};

std::vector<std::string> tokenize(const std::string& s) {
  std::istringstream in(s);
  std::vector<std::string> out;
  for (std::string w; in >> w;) out.push_back(w);
  return out;
}

std::vector<Edge> build_edges(const Draft& d, int cols) {
  std::set<std::pair<std::size_t, std::size_t>> pairs;
  auto link = [&](std::size_t a, std::size_t b) { pairs.insert(std::minmax(a, b)); };
  auto dist = [&](std::size_t a, std::size_t b) { return distance(d.viewpoints[a].position, d.viewpoints[b].position); };
  for (const Room& room : d.rooms) {
    const auto& v = room.viewpoints;
    // Prim's spanning tree keeps the room connected; short extra links add loops.
    std::vector<bool> in_tree(v.size(), false);
    in_tree[0] = true;
    for (std::size_t added = 1; added < v.size(); ++added) {
      double best = 1e300;
      std::size_t ba = 0, bb = 0;
      for (std::size_t i = 0; i < v.size(); ++i) {
        if (!in_tree[i]) continue;
        for (std::size_t j = 0; j < v.size(); ++j) {
          if (in_tree[j]) continue;
          if (const double dd = dist(v[i], v[j]); dd < best) {
            best = dd;
            ba = i;
            bb = j;
          }
        }
      }
      in_tree[bb] = true;
      link(v[ba], v[bb]);
    }
    for (std::size_t i = 0; i < v.size(); ++i) {
      for (std::size_t j = i + 1; j < v.size(); ++j) {
        if (dist(v[i], v[j]) <= kIntraRoomLink) link(v[i], v[j]);
      }
    }
  }
  // A door between every pair of grid-adjacent rooms, through the closest viewpoint pair.
  const int n_rooms = static_cast<int>(d.rooms.size());
  for (int r = 0; r < n_rooms; ++r) {
    for (int s = r + 1; s < n_rooms; ++s) {
      const int rc = r % cols, rr = r / cols, sc = s % cols, sr = s / cols;
      if (std::abs(rc - sc) + std::abs(rr - sr) != 1) continue;
      double best = 1e300;
      std::size_t ba = 0, bb = 0;
      for (std::size_t a : d.rooms[r].viewpoints) {
        for (std::size_t b : d.rooms[s].viewpoints) {
          if (const double dd = dist(a, b); dd < best) {
            best = dd;
            ba = a;
            bb = b;
          }
        }
      }
      link(ba, bb);
    }
  }
  std::vector<Edge> edges;
  for (auto [a, b] : pairs) edges.push_back({d.viewpoints[a].id, d.viewpoints[b].id, dist(a, b)});
  return edges;
}

std::vector<std::vector<std::size_t>> category_pools(int n_categories) {
  std::vector<std::vector<std::size_t>> pools(kRooms.size());
  for (std::size_t i = 0; i < static_cast<std::size_t>(n_categories); ++i) pools[i % kRooms.size()].push_back(i);
  return pools;
}

bool place_viewpoints(const SynthesisParams& p, std::mt19937_64& rng, Draft& d) {
  for (int i = 0; i < p.n_viewpoints; ++i) {
    const int room = i < static_cast<int>(d.rooms.size()) ? i : static_cast<int>(uniform_index(rng, d.rooms.size()));
    Room& r = d.rooms[room];
    bool placed = false;
    for (int attempt = 0; attempt < 200 && !placed; ++attempt) {
      const Vec3 pos{r.x0 + uniform_real(rng, 0.6, p.room_extent - 0.6), r.y0 + uniform_real(rng, 0.6, p.room_extent - 0.6),
                     kCameraHeight};
      bool ok = true;
      for (std::size_t other : r.viewpoints) ok = ok && distance(pos, d.viewpoints[other].position) >= kMinViewpointSpacing;
      if (!ok) continue;
      r.viewpoints.push_back(d.viewpoints.size());
      d.viewpoints.push_back({padded('v', d.viewpoints.size()), pos});
      d.vp_room.push_back(room);
      placed = true;
    }
    if (!placed) return false;
  }
  return true;
}

bool place_objects(const SynthesisParams& p, std::mt19937_64& rng, Draft& d,
                   const std::vector<std::vector<std::size_t>>& pools) {
  std::set<std::tuple<int, std::string, std::string>> used;  // (room, attribute, category)
  for (int i = 0; i < p.n_objects; ++i) {
    bool placed = false;
    for (int attempt = 0; attempt < 200 && !placed; ++attempt) {
      const std::size_t room_idx = uniform_index(rng, d.rooms.size());
      const Room& room = d.rooms[room_idx];
      const auto& pool = pools[room.type];
      const std::string& category = kCategories[pool[uniform_index(rng, pool.size())]];
      const std::string& attr = kAttributes[uniform_index(rng, kAttributes.size())];
      const Vec3 anchor = d.viewpoints[room.viewpoints[uniform_index(rng, room.viewpoints.size())]].position;
      const double angle = uniform_real(rng, 0.0, 2.0 * std::numbers::pi);
      const double reach = uniform_real(rng, 0.8, 2.2);
      Vec3 c{anchor.x + reach * std::sin(angle), anchor.y + reach * std::cos(angle), uniform_real(rng, 0.3, 1.6)};
      c.x = std::clamp(c.x, room.x0 + 0.2, room.x0 + p.room_extent - 0.2);
      c.y = std::clamp(c.y, room.y0 + 0.2, room.y0 + p.room_extent - 0.2);
      OrientedBox3D box;
      box.center = c;
      const double yaw = uniform_real(rng, 0.0, std::numbers::pi);
      box.axes = {Vec3{std::cos(yaw), std::sin(yaw), 0.0}, Vec3{-std::sin(yaw), std::cos(yaw), 0.0}, Vec3{0.0, 0.0, 1.0}};
      for (double& r : box.radii) r = uniform_real(rng, 0.1, 0.45);
      const double reach_max = std::max({box.radii[0], box.radii[1], box.radii[2]}) * std::sqrt(3.0);
      bool clear = true;
      for (const auto& vp : d.viewpoints) clear = clear && distance(vp.position, c) > reach_max + 0.3;
      if (!clear) continue;
      if (!used.insert({static_cast<int>(room_idx), attr, category}).second) continue;
      d.objects.push_back({padded('o', d.objects.size()), attr + " " + category, category, box});
      d.obj_room.push_back(static_cast<int>(room_idx));
      d.obj_attr.push_back(attr);
      d.rooms[room_idx].objects.push_back(d.objects.size() - 1);
      placed = true;
    }
    if (!placed) return false;
  }
  return true;
}

std::vector<std::string> make_instruction(const SynthesisParams& p, std::mt19937_64& rng, const Draft& d,
                                          std::size_t target) {
  const Room& room = d.rooms[d.obj_room[target]];
  const auto& obj = d.objects[target];
  // Landmark: the nearest other object in the room, preferring another category.
  std::optional<std::size_t> landmark;
  double best = 1e300;
  for (int pass = 0; pass < 2 && !landmark; ++pass) {
    for (std::size_t other : room.objects) {
      if (other == target) continue;
      if (pass == 0 && d.objects[other].category == obj.category) continue;
      if (const double dd = distance(d.objects[other].box.center, obj.box.center); dd < best) {
        best = dd;
        landmark = other;
      }
    }
  }
  const std::string& room_name = kRooms[room.type];
  const std::string& verb = kVerbs[uniform_index(rng, kVerbs.size())];
  std::string text;
  if (p.instruction_template_set == "short") {
    text = "find the " + obj.label + " in the " + room_name;
  } else {
    text = "go to the " + room_name + " and " + verb + " the " + obj.label;
    if (landmark) text += " near the " + d.objects[*landmark].category;
  }
  return tokenize(text);
}

std::optional<SyntheticWorld> attempt(const SynthesisParams& p, std::uint64_t seed, int attempt_no) {
  std::mt19937_64 rng(seed);
  const auto pools = category_pools(p.n_categories);
  std::vector<int> usable_types;
  for (std::size_t t = 0; t < pools.size(); ++t) {
    if (!pools[t].empty()) usable_types.push_back(static_cast<int>(t));
  }
  const int n_rooms = std::min(p.n_viewpoints, std::max(2, (p.n_viewpoints + 3) / 4));
  const int cols = static_cast<int>(std::ceil(std::sqrt(static_cast<double>(n_rooms))));
  std::vector<int> types = usable_types;
  for (std::size_t i = types.size(); i > 1; --i) std::swap(types[i - 1], types[uniform_index(rng, i)]);
  Draft d;
  for (int r = 0; r < n_rooms; ++r) {
    Room room;
    room.type = types[r % types.size()];
    room.x0 = (r % cols) * p.room_extent;
    room.y0 = (r / cols) * p.room_extent;
    d.rooms.push_back(room);
  }
  if (!place_viewpoints(p, rng, d) || !place_objects(p, rng, d, pools)) return std::nullopt;

  std::string env_id = "w" + std::to_string(p.rng_seed);
  Environment env(env_id, d.viewpoints, build_edges(d, cols), d.objects,
                  hash_combine(p.rng_seed, static_cast<std::uint64_t>(attempt_no)));

  // Visible object ids per viewpoint.
  std::vector<std::set<std::string>> seen(d.viewpoints.size());
  for (std::size_t v = 0; v < d.viewpoints.size(); ++v) {
    for (const auto& view : panorama(env, d.viewpoints[v].id)) {
      for (const auto& proj : view) seen[v].insert(proj.object);
    }
  }
  std::vector<Task> tasks;
  for (std::size_t o = 0; o < d.objects.size(); ++o) {
    const auto& id = d.objects[o].id;
    std::vector<std::string> goals;
    std::vector<std::size_t> starts_far, starts_any;
    for (std::size_t v = 0; v < d.viewpoints.size(); ++v) {
      if (seen[v].contains(id)) {
        goals.push_back(d.viewpoints[v].id);
      } else {
        starts_any.push_back(v);
        if (d.vp_room[v] != d.obj_room[o]) starts_far.push_back(v);
      }
    }
    // Draws happen unconditionally so one skipped object does not perturb the rest.
    const double pick = uniform01(rng);
    const int heading_bin = static_cast<int>(uniform_index(rng, kHeadingCount));
    auto instruction = make_instruction(p, rng, d, o);
    if (goals.empty() || starts_any.empty()) continue;
    const auto& pool = starts_far.empty() ? starts_any : starts_far;
    const std::size_t start = pool[static_cast<std::size_t>(pick * pool.size()) % pool.size()];
    Task t;
    t.id = env_id + "_" + padded('t', o);
    t.instruction = std::move(instruction);
    t.start_viewpoint = d.viewpoints[start].id;
    t.start_heading = heading_bin * kHeadingStep;
    t.start_elevation = 0.0;
    t.target_object = id;
    t.goal_viewpoints = std::move(goals);
    validate_task(env, t);
    tasks.push_back(std::move(t));
  }
  if (tasks.empty()) return std::nullopt;
  return SyntheticWorld{std::move(env), std::move(tasks)};
}

}  // namespace

const std::vector<std::string>& category_vocabulary() { return kCategories; }
const std::vector<std::string>& room_vocabulary() { return kRooms; }
const std::vector<std::string>& attribute_vocabulary() { return kAttributes; }

SyntheticWorld generate_synthetic_world(const SynthesisParams& p) {
  if (p.n_viewpoints < 2) throw std::invalid_argument("n_viewpoints must be at least 2");
  if (p.n_objects < 1) throw std::invalid_argument("n_objects must be at least 1");
  if (p.n_categories < 1 || p.n_categories > static_cast<int>(kCategories.size()))
    throw std::invalid_argument("n_categories must be in 1.." + std::to_string(kCategories.size()));
  if (!(p.room_extent >= 2.0)) throw std::invalid_argument("room_extent must be at least 2 m");
  if (p.instruction_template_set != "standard" && p.instruction_template_set != "short")
    throw std::invalid_argument("unknown instruction template set " + p.instruction_template_set);
  for (int a = 0; a < kMaxAttempts; ++a) {
    if (auto world = attempt(p, hash_combine(p.rng_seed, static_cast<std::uint64_t>(a)), a)) return std::move(*world);
  }
  throw GenerationError("could not satisfy world constraints after " + std::to_string(kMaxAttempts) + " attempts");
}

}  // namespace refnav
