#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "swmlp/linkmap.hpp"

namespace swmlp {

/// One sampled GPS registration, already matched to a link.
struct DataPoint {
  LinkId link_id = 0;
  double position_on_link = 0.0;  // m from link start
  double speed = 0.0;             // m/s

  bool operator==(const DataPoint&) const = default;
};

/// Points in registration order.
struct Trip {
  std::int64_t trip_id = 0;
  std::vector<DataPoint> points;

  bool operator==(const Trip&) const = default;
};

/// Kinematic trip simulator settings.
///
/// The vehicle cruises at min(speed_limit, cruise_cap(lanes, priority)), brakes
/// at `brake_mps2` ahead of slower links and stops, accelerates at `accel_mps2`
/// out of slower links and stops. At a link end with a traffic light it stops
/// with probability `stop_probability`; a standstill is registered as an extra
/// point at the stop line. Otherwise points are `step_m` apart in travelled
/// distance. Gaussian noise with `noise_sigma` is added last and clipped at 0.
struct SimConfig {
  int n_trips = 100;
  int mean_trip_len = 60;
  std::uint64_t seed = 1;
  double noise_sigma = 0.5;
  double step_m = 10.0;
  double stop_probability = 0.5;
  double accel_mps2 = 1.5;
  double brake_mps2 = 2.0;
  std::int64_t first_trip_id = 0;
  int threads = 1;

  /// Empty when the config is usable.
  std::vector<std::string> problems() const;
};

/// Lane/priority dependent comfort speed, m/s. The simulator cruises at
/// min(speed_limit, cruise_cap).
double cruise_cap(int lanes, int priority);
double cruise_speed(const Link& link);

/// Random walks over the successor relation with a piecewise constant
/// acceleration speed profile. Output depends only on (map, cfg); each trip
/// draws from its own stream seeded by (cfg.seed, trip index).
std::vector<Trip> simulate_trips(const LinkMap& map, const SimConfig& cfg);

struct TripLoadStats {
  std::size_t discarded_short = 0;  // trips with fewer than 3 points
};

/// Rows: trip_id,sequence_index,link_id,position_m,speed_mps (header required).
std::vector<Trip> parse_trips(const std::string& text, const LinkMap& map,
                              const std::string& source_name = "<memory>",
                              TripLoadStats* stats = nullptr);
std::vector<Trip> load_trips(const std::filesystem::path& path, const LinkMap& map,
                             TripLoadStats* stats = nullptr);
std::string serialize_trips(const std::vector<Trip>& trips);
void save_trips(const std::vector<Trip>& trips, const std::filesystem::path& path);

/// Invariant check for one trip against its map; returns human-readable problems.
std::vector<std::string> check_trip(const Trip& trip, const LinkMap& map);

struct DatasetSplit {
  std::vector<Trip> train;
  std::vector<Trip> val;
  std::vector<Trip> test;
  bool empty_test = false;
};

/// Verifies the three region sets are pairwise disjoint in trip ids. Order is kept.
DatasetSplit split_by_region(std::vector<Trip> train, std::vector<Trip> val,
                             std::vector<Trip> test);

}  // namespace swmlp
