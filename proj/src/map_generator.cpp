#include "swmlp/map_generator.hpp"

#include <array>
#include <random>
#include <stdexcept>
#include <vector>

namespace swmlp {

namespace {

struct RoadClass {
  int priority;
  int lanes;
  double limit_kmh;
};

constexpr std::array<RoadClass, 5> kClasses{{
    {1, 1, 30.0},
    {2, 1, 50.0},
    {3, 2, 50.0},
    {4, 2, 70.0},
    {5, 3, 90.0},
}};

constexpr std::array<double, 5> kLimitsKmh{30.0, 50.0, 70.0, 90.0, 110.0};

}  // namespace

LinkMap generate_grid_map(const GridMapConfig& cfg) {
  if (cfg.rows < 2 || cfg.cols < 2) throw std::invalid_argument("grid needs at least 2x2 nodes");
  if (!(cfg.min_block_m > 0.0) || cfg.max_block_m < cfg.min_block_m)
    throw std::invalid_argument("bad block length range");

  std::mt19937_64 rng(cfg.seed);
  std::uniform_real_distribution<double> block(cfg.min_block_m, cfg.max_block_m);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  std::uniform_int_distribution<int> pick_class(0, static_cast<int>(kClasses.size()) - 1);
  std::uniform_int_distribution<int> pick_limit(0, static_cast<int>(kLimitsKmh.size()) - 1);

  std::vector<double> row_gap(cfg.rows - 1), col_gap(cfg.cols - 1);
  for (auto& g : row_gap) g = block(rng);
  for (auto& g : col_gap) g = block(rng);

  std::vector<int> row_class(cfg.rows), col_class(cfg.cols);
  for (auto& c : row_class) c = pick_class(rng);
  for (auto& c : col_class) c = pick_class(rng);

  const auto node = [&](int r, int c) { return r * cfg.cols + c; };
  std::vector<bool> light(static_cast<std::size_t>(cfg.rows * cfg.cols));
  for (std::size_t i = 0; i < light.size(); ++i) light[i] = unit(rng) < cfg.light_probability;

  struct Edge {
    int from, to;
    double length;
    RoadClass cls;
    double limit_kmh;
  };
  std::vector<Edge> edges;

  const auto add_block = [&](int a, int b, double length, RoadClass cls) {
    // Both directions of a block share length and class; the limit may deviate.
    double limit = cls.limit_kmh;
    if (unit(rng) < cfg.limit_deviation_probability) limit = kLimitsKmh[pick_limit(rng)];
    edges.push_back({a, b, length, cls, limit});
    edges.push_back({b, a, length, cls, limit});
  };

  for (int r = 0; r < cfg.rows; ++r)
    for (int c = 0; c + 1 < cfg.cols; ++c)
      add_block(node(r, c), node(r, c + 1), col_gap[c], kClasses[row_class[r]]);
  for (int c = 0; c < cfg.cols; ++c)
    for (int r = 0; r + 1 < cfg.rows; ++r)
      add_block(node(r, c), node(r + 1, c), row_gap[r], kClasses[col_class[c]]);

  LinkMap map;
  map.region_tag = cfg.region_tag;
  for (std::size_t i = 0; i < edges.size(); ++i) {
    const Edge& e = edges[i];
    Link link;
    link.id = static_cast<LinkId>(i + 1);
    link.priority = e.cls.priority;
    link.lanes = e.cls.lanes;
    link.speed_limit = kmh_to_mps(e.limit_kmh);
    link.length = e.length;
    link.light_at_start = light[e.from];
    link.light_at_end = light[e.to];
    for (std::size_t j = 0; j < edges.size(); ++j)
      if (edges[j].from == e.to && edges[j].to != e.from)
        link.successors.push_back(static_cast<LinkId>(j + 1));
    map.links.emplace(link.id, std::move(link));
  }
  derive_predecessors(map);
  return map;
}

}  // namespace swmlp
