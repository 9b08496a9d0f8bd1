#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "swmlp/features.hpp"

namespace swmlp {

/// How a target point is paired with two context points.
///  - Past: the two immediately previous points.
///  - PastFuture: the immediately previous and the immediately next point.
///  - PunctualPast: the points `far` and `near` registrations back.
///  - Pointwise: no context; the target alone with its PAT (baseline input).
enum class Scheme { Past, PastFuture, PunctualPast, Pointwise };

std::string_view scheme_name(Scheme s);  // "pa", "pf", "pup", "baseline"
std::optional<Scheme> parse_scheme(std::string_view name);

struct SchemeConfig {
  Scheme scheme = Scheme::PastFuture;
  int pup_near = 5;
  int pup_far = 10;
};

struct Provenance {
  std::int64_t trip_id = 0;
  std::size_t target_index = 0;
  Scheme scheme = Scheme::Past;

  bool operator==(const Provenance&) const = default;
};

/// Two context points plus the target, whose PAT has been replaced by the mask sentinel.
/// Pointwise samples keep the target's PAT and leave both contexts zero.
struct AssociatedSample {
  FeatureVector context_a{};
  FeatureVector context_b{};
  FeatureVector target{};
  double label = 0.0;  // recorded speed of the target, m/s
  Provenance provenance;

  bool operator==(const AssociatedSample&) const = default;
};

/// Replaces the PAT component. `sentinel` is 0 for raw vectors and
/// NormStats::pat_sentinel() for normalized ones.
FeatureVector mask_target_pat(const FeatureVector& v, double sentinel = 0.0);

std::vector<AssociatedSample> build_pa(const FeaturizedTrip& trip, double sentinel = 0.0);
std::vector<AssociatedSample> build_pf(const FeaturizedTrip& trip, double sentinel = 0.0);
std::vector<AssociatedSample> build_pup(const FeaturizedTrip& trip, int near, int far,
                                        double sentinel = 0.0);
std::vector<AssociatedSample> build_pointwise(const FeaturizedTrip& trip);

/// Samples of one trip under `cfg`, in target order.
std::vector<AssociatedSample> build_samples(const FeaturizedTrip& trip, const SchemeConfig& cfg,
                                            double sentinel = 0.0);

/// Minimum trip length the scheme can target at least one point of.
std::size_t min_trip_length(const SchemeConfig& cfg);

/// Target indices the scheme produces for a trip of n points.
std::vector<std::size_t> target_indices(std::size_t n, const SchemeConfig& cfg);

/// Concatenates per-trip samples in input order. Trips too short for the scheme are
/// skipped and counted in `skipped`.
std::vector<AssociatedSample> build_dataset(std::span<const FeaturizedTrip> trips,
                                            const SchemeConfig& cfg, double sentinel,
                                            std::size_t* skipped = nullptr);

std::string serialize_samples(std::span<const AssociatedSample> samples);
std::vector<AssociatedSample> parse_samples(const std::string& text,
                                            const std::string& source_name = "<memory>");
std::vector<AssociatedSample> load_samples(const std::filesystem::path& path);
void save_samples(std::span<const AssociatedSample> samples, const std::filesystem::path& path);

}  // namespace swmlp
