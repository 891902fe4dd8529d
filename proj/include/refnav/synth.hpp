#pragma once

#include <cstdint>
#include <random>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "refnav/env.hpp"

namespace refnav {

class GenerationError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct SynthesisParams {
  int n_viewpoints = 20;
  int n_objects = 20;
  int n_categories = 24;
  double room_extent = 5.0;
  std::uint64_t rng_seed = 0;
  std::string instruction_template_set = "standard";  // "standard" or "short"
};

using SyntheticWorld = World;

/// Rooms on a grid, viewpoints inside rooms, objects near viewpoints. Object
/// categories are drawn from pools tied to room types, and every target is
/// invisible from its task's start viewpoint. Deterministic for a fixed seed.
SyntheticWorld generate_synthetic_world(const SynthesisParams& params);

/// Full category vocabulary in generation order (at most 48 entries).
const std::vector<std::string>& category_vocabulary();
const std::vector<std::string>& room_vocabulary();
const std::vector<std::string>& attribute_vocabulary();

// Platform-stable draws from a 64-bit engine.
inline double uniform01(std::mt19937_64& rng) { return static_cast<double>(rng() >> 11) * 0x1.0p-53; }
inline double uniform_real(std::mt19937_64& rng, double lo, double hi) { return lo + (hi - lo) * uniform01(rng); }
inline std::size_t uniform_index(std::mt19937_64& rng, std::size_t n) {
  return static_cast<std::size_t>(uniform01(rng) * static_cast<double>(n)) % n;
}

}  // namespace refnav
