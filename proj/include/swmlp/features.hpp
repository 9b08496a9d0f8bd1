#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "swmlp/linkmap.hpp"
#include "swmlp/trips.hpp"

namespace swmlp {

inline constexpr std::size_t kFeatureCount = 8;

/// Column order of FeatureVector. Fixed; serialized datasets rely on it.
enum Feature : std::size_t {
  kPriority = 0,
  kLightStart,
  kLightEnd,
  kNeighborCount,
  kLanes,
  kSpeedLimit,  // m/s
  kLinkLength,  // m
  kPat,         // percent of the link already travelled
};

inline constexpr std::array<const char*, kFeatureCount> kFeatureNames{
    "priority", "light_start", "light_end", "neighbors", "lanes", "speed_limit", "length", "pat"};

using FeatureVector = std::array<double, kFeatureCount>;

/// Percentage of already travelled link.
double pat(double position_on_link, double link_length);

FeatureVector featurize_point(const LinkMap& map, const DataPoint& p);

struct NormStats {
  FeatureVector mean{};
  FeatureVector std{};
  std::array<bool, kFeatureCount> constant{};

  /// Normalized value of a raw 0 in the PAT column.
  double pat_sentinel() const { return (0.0 - mean[kPat]) / std[kPat]; }

  bool operator==(const NormStats&) const = default;
};

/// Population mean and standard deviation per column. Constant columns get std 1.
NormStats fit_norm(std::span<const FeatureVector> train_vectors);
FeatureVector apply_norm(const FeatureVector& v, const NormStats& stats);
FeatureVector invert_norm(const FeatureVector& v, const NormStats& stats);

/// A trip as model-ready rows: one feature vector and one speed label per point.
struct FeaturizedTrip {
  std::int64_t trip_id = 0;
  std::vector<FeatureVector> features;
  std::vector<double> speeds;

  std::size_t size() const { return features.size(); }
  bool operator==(const FeaturizedTrip&) const = default;
};

FeaturizedTrip featurize_trip(const LinkMap& map, const Trip& trip);
std::vector<FeaturizedTrip> featurize_trips(const LinkMap& map, std::span<const Trip> trips);

/// All raw vectors of a set of trips, in trip then point order.
std::vector<FeatureVector> collect_vectors(std::span<const FeaturizedTrip> trips);

/// Normalized copy of a featurized dataset.
std::vector<FeaturizedTrip> normalize(std::span<const FeaturizedTrip> trips, const NormStats& stats);

/// A normalized dataset and the training statistics that produced it.
struct FeatureDataset {
  NormStats stats;
  std::vector<FeaturizedTrip> trips;
};

std::string serialize_feature_dataset(const FeatureDataset& ds);
FeatureDataset parse_feature_dataset(const std::string& text,
                                     const std::string& source_name = "<memory>");
FeatureDataset load_feature_dataset(const std::filesystem::path& path);
void save_feature_dataset(const FeatureDataset& ds, const std::filesystem::path& path);

std::string serialize_norm_stats(const NormStats& stats);
NormStats parse_norm_stats(const std::string& text, const std::string& source_name = "<memory>");

}  // namespace swmlp
