#pragma once

#include <array>
#include <cmath>
#include <numbers>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace refnav {

struct Vec3 {
  double x = 0.0;
  double y = 0.0;
  double z = 0.0;

  friend Vec3 operator+(Vec3 a, Vec3 b) { return {a.x + b.x, a.y + b.y, a.z + b.z}; }
  friend Vec3 operator-(Vec3 a, Vec3 b) { return {a.x - b.x, a.y - b.y, a.z - b.z}; }
  friend Vec3 operator*(double s, Vec3 a) { return {s * a.x, s * a.y, s * a.z}; }
  friend bool operator==(const Vec3&, const Vec3&) = default;
};

inline double dot(Vec3 a, Vec3 b) { return a.x * b.x + a.y * b.y + a.z * b.z; }
inline Vec3 cross(Vec3 a, Vec3 b) {
  return {a.y * b.z - a.z * b.y, a.z * b.x - a.x * b.z, a.x * b.y - a.y * b.x};
}
inline double norm(Vec3 a) { return std::sqrt(dot(a, a)); }
inline double distance(Vec3 a, Vec3 b) { return norm(a - b); }

/// 3D object extent: a center, three orthonormal axis directions and the
/// half-extent (radius) along each of them.
struct OrientedBox3D {
  Vec3 center;
  std::array<Vec3, 3> axes{Vec3{1, 0, 0}, Vec3{0, 1, 0}, Vec3{0, 0, 1}};
  std::array<double, 3> radii{1.0, 1.0, 1.0};

  friend bool operator==(const OrientedBox3D&, const OrientedBox3D&) = default;
};

/// Empty string when the box is valid, otherwise a description of the first
/// violated invariant.
std::string validate_box(const OrientedBox3D& box);

/// Corners center + sum_i s_i r_i d_i, sign triples in lexicographic order
/// (-,-,-), (-,-,+), ..., (+,+,+).
std::array<Vec3, 8> box_vertices(const OrientedBox3D& box);

inline constexpr int kHeadingCount = 12;
inline constexpr int kElevationCount = 3;
inline constexpr int kViewCount = kHeadingCount * kElevationCount;
inline constexpr double kHeadingStep = std::numbers::pi / 6.0;
inline constexpr double kElevationStep = std::numbers::pi / 6.0;

/// One of the 36 discretized camera orientations at a viewpoint.
/// heading = heading_index * 30deg, elevation = (elevation_index - 1) * 30deg,
/// view index k = 12 * elevation_index + heading_index + 1.
struct ViewState {
  std::string viewpoint;
  int heading_index = 0;    // 0..11
  int elevation_index = 1;  // 0..2, 1 is level

  double heading() const { return heading_index * kHeadingStep; }
  double elevation() const { return (elevation_index - 1) * kElevationStep; }
  int index() const { return kHeadingCount * elevation_index + heading_index + 1; }

  static ViewState from_index(std::string viewpoint, int k);
  friend bool operator==(const ViewState&, const ViewState&) = default;
};

/// All 36 views at a viewpoint, ordered by k.
std::vector<ViewState> all_views(const std::string& viewpoint);

/// Heading bin (0..11) nearest to an angle in radians.
int nearest_heading_index(double heading);
/// Heading (radians, clockwise from +y seen from above) of the horizontal
/// direction from `from` to `to`.
double heading_towards(Vec3 from, Vec3 to);

struct CameraIntrinsics {
  int width = 640;
  int height = 480;
  double vertical_fov = std::numbers::pi / 3.0;

  double focal() const { return (height / 2.0) / std::tan(vertical_fov / 2.0); }
};

/// Pixel box: left-top corner plus width and height.
struct BBox2D {
  double x = 0.0;
  double y = 0.0;
  double w = 0.0;
  double h = 0.0;

  double area() const { return w * h; }
  double right() const { return x + w; }
  double bottom() const { return y + h; }
  friend bool operator==(const BBox2D&, const BBox2D&) = default;
};

/// World-to-camera rigid transform. Camera frame is right-handed with +z
/// along the optical axis, +y up and +x to the left of the image; pixel
/// coordinates grow rightwards (u) and downwards (v).
struct CameraPose {
  Vec3 position;
  Vec3 left;
  Vec3 up;
  Vec3 forward;

  Vec3 to_camera(Vec3 world) const {
    const Vec3 d = world - position;
    return {dot(left, d), dot(up, d), dot(forward, d)};
  }
};

/// Heading rotates about world +z (0 looks along +y, increasing clockwise
/// seen from above); positive elevation pitches the optical axis upwards.
CameraPose camera_pose(Vec3 position, double heading, double elevation);

inline constexpr double kNearPlane = 0.05;

struct Projection {
  BBox2D bbox;
  double depth = 0.0;
};

std::optional<Projection> project_box(const OrientedBox3D& box, const CameraPose& pose,
                                      const CameraIntrinsics& intr = {});

struct ProjectedObject {
  std::string object;
  BBox2D bbox;
  double depth = 0.0;
  ViewState view;

  friend bool operator==(const ProjectedObject&, const ProjectedObject&) = default;
};

/// Closed containment of `inner` in `outer`.
bool contains(const BBox2D& outer, const BBox2D& inner);

/// Drops every projection whose box lies inside another projection's box
/// while being strictly farther away. Input order is preserved.
std::vector<ProjectedObject> occlusion_filter(std::span<const ProjectedObject> projs);

double iou(const BBox2D& a, const BBox2D& b);

}  // namespace refnav
