#pragma once

#include <array>
#include <cstdint>
#include <string_view>
#include <vector>

#include "refnav/env.hpp"
#include "refnav/geometry.hpp"

namespace refnav {

/// Objects within 3 m of the view's viewpoint that project into the image and
/// survive the occlusion rule, sorted by depth then id.
std::vector<ProjectedObject> visible_objects(const Environment& env, const ViewState& state,
                                             const CameraIntrinsics& intr = {});

using Panorama = std::array<std::vector<ProjectedObject>, kViewCount>;

/// visible_objects for all 36 views at a viewpoint; element k-1 holds view k.
Panorama panorama(const Environment& env, std::string_view vp, const CameraIntrinsics& intr = {});

/// True iff the object survives visible_objects in at least one of the 36 views.
bool object_visible_from(const Environment& env, std::string_view vp, std::string_view object,
                         const CameraIntrinsics& intr = {});

// Deterministic hashing used by the pseudo-feature provider.
std::uint64_t hash_string(std::string_view s);
std::uint64_t hash_combine(std::uint64_t a, std::uint64_t b);
/// Unit-norm vector of length n drawn from the hash stream of `seed`.
std::vector<double> hash_unit_vector(std::uint64_t seed, std::size_t n);

/// Shared, world-independent embedding for an object category.
std::vector<double> category_embedding(std::string_view category, std::size_t dim);

/// Pseudo-visual descriptor of a view: the first dim/2 entries are a
/// positional hash of (feature_seed, viewpoint, k) with norm 0.5; the rest is
/// the normalized sum of category embeddings of the visible objects (zero
/// when the view is empty). Requires dim >= 8.
std::vector<double> view_feature(const Environment& env, const ViewState& state, std::size_t dim,
                                 const CameraIntrinsics& intr = {});
/// Same, from an already-computed visible list.
std::vector<double> view_feature(const Environment& env, const ViewState& state,
                                 const std::vector<ProjectedObject>& visible, std::size_t dim);

/// Object appearance for grid x grid cells, each a vector of length `dim`.
/// The center cell (and the single cell when grid == 1) equals the object's
/// base embedding; other cells add an id-seeded perturbation that grows with
/// distance from the box center.
std::vector<std::vector<double>> object_feature(const Environment& env, std::string_view object, int grid,
                                                std::size_t dim);
std::vector<double> object_base_embedding(const Environment& env, std::string_view object, std::size_t dim);

}  // namespace refnav
