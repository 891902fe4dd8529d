#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <map>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "refnav/geometry.hpp"

namespace refnav {

inline constexpr int kFormatVersion = 1;
inline constexpr double kVisibilityRadius = 3.0;

class ParseError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class ValidationError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct Viewpoint {
  std::string id;
  Vec3 position;
  friend bool operator==(const Viewpoint&, const Viewpoint&) = default;
};

struct Edge {
  std::string a;
  std::string b;
  double length = 0.0;
  friend bool operator==(const Edge&, const Edge&) = default;
};

struct ObjectAnnotation {
  std::string id;
  std::string label;
  std::string category;
  OrientedBox3D box;
  friend bool operator==(const ObjectAnnotation&, const ObjectAnnotation&) = default;
};

struct Neighbor {
  std::size_t index;
  double length;
};

/// Viewpoint graph plus object annotations. Immutable once constructed;
/// construction validates every invariant and builds lookup tables.
class Environment {
 public:
  Environment(std::string id, std::vector<Viewpoint> viewpoints, std::vector<Edge> edges,
              std::vector<ObjectAnnotation> objects, std::uint64_t feature_seed);

  const std::string& id() const { return id_; }
  const std::vector<Viewpoint>& viewpoints() const { return viewpoints_; }
  const std::vector<Edge>& edges() const { return edges_; }
  const std::vector<ObjectAnnotation>& objects() const { return objects_; }
  std::uint64_t feature_seed() const { return feature_seed_; }

  bool has_viewpoint(std::string_view id) const;
  bool has_object(std::string_view id) const;
  std::size_t viewpoint_index(std::string_view id) const;
  const Viewpoint& viewpoint(std::string_view id) const;
  const ObjectAnnotation& object(std::string_view id) const;
  /// Neighbors sorted by viewpoint id.
  const std::vector<Neighbor>& neighbors(std::size_t index) const { return adjacency_[index]; }
  /// Edge length between adjacent viewpoints, or a negative value if not adjacent.
  double edge_length(std::string_view a, std::string_view b) const;

  friend bool operator==(const Environment& a, const Environment& b) {
    return a.id_ == b.id_ && a.viewpoints_ == b.viewpoints_ && a.edges_ == b.edges_ &&
           a.objects_ == b.objects_ && a.feature_seed_ == b.feature_seed_;
  }

 private:
  std::string id_;
  std::vector<Viewpoint> viewpoints_;
  std::vector<Edge> edges_;
  std::vector<ObjectAnnotation> objects_;
  std::uint64_t feature_seed_;
  std::map<std::string, std::size_t, std::less<>> vp_index_;
  std::map<std::string, std::size_t, std::less<>> obj_index_;
  std::vector<std::vector<Neighbor>> adjacency_;
};

struct Task {
  std::string id;
  std::vector<std::string> instruction;
  std::string start_viewpoint;
  double start_heading = 0.0;
  double start_elevation = 0.0;
  std::string target_object;
  std::vector<std::string> goal_viewpoints;
  friend bool operator==(const Task&, const Task&) = default;
};

/// An environment together with the tasks posed in it.
struct World {
  Environment env;
  std::vector<Task> tasks;
};

/// Throws ValidationError unless every task invariant holds against `env`.
void validate_task(const Environment& env, const Task& task);

std::string environment_to_json(const Environment& env);
Environment environment_from_json(std::string_view text);
Environment load_environment(const std::filesystem::path& path);
void save_environment(const Environment& env, const std::filesystem::path& path);

std::string tasks_to_json(const std::vector<Task>& tasks);
std::vector<Task> tasks_from_json(std::string_view text);
/// Loads and validates every task against `env`.
std::vector<Task> load_tasks(const std::filesystem::path& path, const Environment& env);
void save_tasks(const std::vector<Task>& tasks, const std::filesystem::path& path);

struct Path {
  std::vector<std::string> viewpoints;
  double length = 0.0;
};

/// Minimal total edge length; among equal-length paths the lexicographically
/// smallest id sequence wins. Throws std::out_of_range for unknown ids and
/// std::runtime_error if `to` is unreachable.
Path shortest_path(const Environment& env, std::string_view from, std::string_view to);

/// Shortest-path distances from `from` to every viewpoint, indexed like env.viewpoints().
std::vector<double> distances_from(const Environment& env, std::string_view from);

/// Goal viewpoint closest to the task start by path length, ties by id.
std::string nearest_goal(const Environment& env, const Task& task);

/// Objects whose box center lies within `radius` (closed) of the viewpoint,
/// sorted by distance then id.
std::vector<const ObjectAnnotation*> objects_near(const Environment& env, std::string_view vp,
                                                  double radius = kVisibilityRadius);

std::string read_text_file(const std::filesystem::path& path);
void write_text_file(const std::filesystem::path& path, std::string_view text);

}  // namespace refnav
