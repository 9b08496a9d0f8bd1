#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "swmlp/association.hpp"
#include "swmlp/features.hpp"
#include "swmlp/neuralnet.hpp"

namespace swmlp {

struct TripPrediction {
  std::int64_t trip_id = 0;
  Scheme scheme = Scheme::PastFuture;
  std::vector<std::size_t> indices;  // target positions in the trip, increasing
  std::vector<double> predicted;     // m/s
  std::vector<double> truth;         // m/s
};

/// Runs the scheme's samples of one (normalized) trip through the model in order.
/// `sentinel` is the normalized PAT mask value.
TripPrediction predict_trip(const nn::Model& model, const FeaturizedTrip& trip,
                            const SchemeConfig& scheme, double sentinel);

struct TripMetrics {
  std::int64_t trip_id = 0;
  std::size_t n_points = 0;
  double rmse = 0.0;
  double mse = 0.0;
  double mae = 0.0;
};

TripMetrics trip_metrics(const TripPrediction& p);

/// Aggregates are unweighted means of the per-trip values.
struct MetricsReport {
  std::vector<TripMetrics> per_trip;
  double rmse = 0.0;
  double mse = 0.0;
  double mae = 0.0;
  std::size_t n_trips = 0;
  std::size_t n_points = 0;
  std::size_t negative_predictions = 0;  // reported unclamped
  std::string scheme;
};

MetricsReport aggregate(std::span<const TripMetrics> per_trip);

struct Evaluation {
  std::vector<TripPrediction> predictions;  // in input trip order
  MetricsReport report;
  std::size_t skipped_trips = 0;            // too short for the scheme
};

/// Predicts every trip long enough for the scheme. Per-trip work may run on
/// `threads` workers; the result does not depend on it.
Evaluation evaluate(const nn::Model& model, std::span<const FeaturizedTrip> trips,
                    const SchemeConfig& scheme, double sentinel, int threads = 1);

std::string serialize_report(const MetricsReport& r);
MetricsReport parse_report(const std::string& json_text, const std::string& source_name = "<memory>");

/// One named line of a speed trace.
struct TraceSeries {
  std::string name;
  std::vector<std::size_t> indices;
  std::vector<double> values;
};

struct Trace {
  std::int64_t trip_id = 0;
  TraceSeries truth;
  std::vector<TraceSeries> predictions;
};

/// Truth is the union of the predictions' truth values. Throws std::invalid_argument
/// if the predictions refer to different trips or disagree on a truth value.
Trace make_trace(std::span<const TripPrediction> preds, std::span<const std::string> names,
                 bool include_predictions = true);

enum class TraceFormat { Csv, Svg };

/// CSV: index,truth,<series...>; a blank cell where a series has no target.
std::string trace_csv(const Trace& t);
/// Speed against ordered data-point index, one polyline per series (truth first).
std::string trace_svg(const Trace& t);
void emit_trace(const Trace& t, const std::filesystem::path& out, TraceFormat format);

}  // namespace swmlp
