#pragma once

#include <cstdint>
#include <string>

#include "swmlp/linkmap.hpp"

namespace swmlp {

/// Synthetic grid city: rows × cols intersections joined by two-way streets.
///
/// Every street (grid row or column) gets a road class that fixes its priority,
/// lane count and speed limit; individual blocks may deviate from the street's
/// limit. Each directed block is one link. Intersections carry a traffic light
/// with `light_probability`; a link has a light at its start/end iff its
/// start/end intersection does. Successors exclude the U-turn.
struct GridMapConfig {
  int rows = 8;
  int cols = 8;
  std::uint64_t seed = 1;
  std::string region_tag;
  double min_block_m = 60.0;
  double max_block_m = 260.0;
  double light_probability = 0.35;
  double limit_deviation_probability = 0.25;
};

LinkMap generate_grid_map(const GridMapConfig& cfg);

}  // namespace swmlp
