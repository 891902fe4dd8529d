#include "refnav/geometry.hpp"

#include <algorithm>
#include <limits>
#include <stdexcept>

namespace refnav {

std::string validate_box(const OrientedBox3D& box) {
  constexpr double kTol = 1e-6;
  auto finite = [](Vec3 v) { return std::isfinite(v.x) && std::isfinite(v.y) && std::isfinite(v.z); };
  if (!finite(box.center)) return "box center is not finite";
  for (int i = 0; i < 3; ++i) {
    if (!finite(box.axes[i])) return "box axis is not finite";
    if (std::abs(norm(box.axes[i]) - 1.0) > kTol) return "box axis " + std::to_string(i) + " is not unit length";
    if (!(box.radii[i] > 0.0) || !std::isfinite(box.radii[i]))
      return "box radius " + std::to_string(i) + " is not positive";
    for (int j = i + 1; j < 3; ++j) {
      if (std::abs(dot(box.axes[i], box.axes[j])) > kTol)
        return "box axes " + std::to_string(i) + " and " + std::to_string(j) + " are not orthogonal";
    }
  }
  return {};
}

std::array<Vec3, 8> box_vertices(const OrientedBox3D& box) {
  std::array<Vec3, 8> out;
  int n = 0;
  for (int s0 : {-1, 1}) {
    for (int s1 : {-1, 1}) {
      for (int s2 : {-1, 1}) {
        out[n++] = box.center + (s0 * box.radii[0]) * box.axes[0] + (s1 * box.radii[1]) * box.axes[1] +
                   (s2 * box.radii[2]) * box.axes[2];
      }
    }
  }
  return out;
}

ViewState ViewState::from_index(std::string viewpoint, int k) {
  if (k < 1 || k > kViewCount) throw std::out_of_range("view index must be in 1..36");
  ViewState v;
  v.viewpoint = std::move(viewpoint);
  v.elevation_index = (k - 1) / kHeadingCount;
  v.heading_index = (k - 1) % kHeadingCount;
  return v;
}

std::vector<ViewState> all_views(const std::string& viewpoint) {
  std::vector<ViewState> views;
  views.reserve(kViewCount);
  for (int k = 1; k <= kViewCount; ++k) views.push_back(ViewState::from_index(viewpoint, k));
  return views;
}

int nearest_heading_index(double heading) {
  const double turns = heading / kHeadingStep;
  const long bin = std::lround(turns);
  return static_cast<int>(((bin % kHeadingCount) + kHeadingCount) % kHeadingCount);
}

double heading_towards(Vec3 from, Vec3 to) {
  const double dx = to.x - from.x;
  const double dy = to.y - from.y;
  double h = std::atan2(dx, dy);
  if (h < 0) h += 2.0 * std::numbers::pi;
  return h;
}

CameraPose camera_pose(Vec3 position, double heading, double elevation) {
  const double sh = std::sin(heading), ch = std::cos(heading);
  const double se = std::sin(elevation), ce = std::cos(elevation);
  CameraPose pose;
  pose.position = position;
  pose.forward = {sh * ce, ch * ce, se};
  pose.up = {-sh * se, -ch * se, ce};
  pose.left = cross(pose.up, pose.forward);
  return pose;
}

std::optional<Projection> project_box(const OrientedBox3D& box, const CameraPose& pose,
                                      const CameraIntrinsics& intr) {
  const double f = intr.focal();
  const double cx = intr.width / 2.0;
  const double cy = intr.height / 2.0;
  double u0 = std::numeric_limits<double>::infinity();
  double v0 = u0;
  double u1 = -u0;
  double v1 = -u0;
  bool any = false;
  for (const Vec3& vertex : box_vertices(box)) {
    const Vec3 c = pose.to_camera(vertex);
    if (c.z <= kNearPlane) continue;
    any = true;
    const double u = cx - f * c.x / c.z;
    const double v = cy - f * c.y / c.z;
    u0 = std::min(u0, u);
    u1 = std::max(u1, u);
    v0 = std::min(v0, v);
    v1 = std::max(v1, v);
  }
  if (!any) return std::nullopt;
  u0 = std::max(u0, 0.0);
  v0 = std::max(v0, 0.0);
  u1 = std::min(u1, static_cast<double>(intr.width));
  v1 = std::min(v1, static_cast<double>(intr.height));
  if (!(u1 > u0) || !(v1 > v0)) return std::nullopt;
  Projection p;
  p.bbox = {u0, v0, u1 - u0, v1 - v0};
  p.depth = norm(pose.to_camera(box.center));
  return p;
}

bool contains(const BBox2D& outer, const BBox2D& inner) {
  return inner.x >= outer.x && inner.y >= outer.y && inner.right() <= outer.right() &&
         inner.bottom() <= outer.bottom();
}

std::vector<ProjectedObject> occlusion_filter(std::span<const ProjectedObject> projs) {
  std::vector<ProjectedObject> kept;
  for (std::size_t i = 0; i < projs.size(); ++i) {
    bool occluded = false;
    for (std::size_t j = 0; j < projs.size() && !occluded; ++j) {
      if (i == j) continue;
      occluded = projs[i].depth > projs[j].depth && contains(projs[j].bbox, projs[i].bbox);
    }
    if (!occluded) kept.push_back(projs[i]);
  }
  return kept;
}

double iou(const BBox2D& a, const BBox2D& b) {
  const double iw = std::max(0.0, std::min(a.right(), b.right()) - std::max(a.x, b.x));
  const double ih = std::max(0.0, std::min(a.bottom(), b.bottom()) - std::max(a.y, b.y));
  const double inter = iw * ih;
  const double uni = a.area() + b.area() - inter;
  if (uni <= 0.0) return 0.0;
  return std::min(1.0, inter / uni);  // right() - x can round past w
}

}  // namespace refnav
