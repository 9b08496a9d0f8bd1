#include "swmlp/evaluation.hpp"

#include <cmath>
#include <exception>
#include <stdexcept>
#include <thread>

#include "json.hpp"
#include "swmlp/errors.hpp"

namespace swmlp {

TripPrediction predict_trip(const nn::Model& model, const FeaturizedTrip& trip,
                            const SchemeConfig& scheme, double sentinel) {
  const auto samples = build_samples(trip, scheme, sentinel);
  TripPrediction p;
  p.trip_id = trip.trip_id;
  p.scheme = scheme.scheme;
  if (samples.empty()) return p;
  const auto pred = nn::predict_batch(model, nn::make_batch(samples));
  for (std::size_t i = 0; i < samples.size(); ++i) {
    p.indices.push_back(samples[i].provenance.target_index);
    p.predicted.push_back(pred(static_cast<Eigen::Index>(i)));
    p.truth.push_back(samples[i].label);
  }
  return p;
}

TripMetrics trip_metrics(const TripPrediction& p) {
  if (p.predicted.empty()) throw std::invalid_argument("trip_metrics: empty prediction");
  if (p.predicted.size() != p.truth.size())
    throw std::invalid_argument("trip_metrics: predicted and truth lengths differ");
  double sq = 0.0, abs_sum = 0.0;
  for (std::size_t i = 0; i < p.predicted.size(); ++i) {
    const double e = p.predicted[i] - p.truth[i];
    sq += e * e;
    abs_sum += std::abs(e);
  }
  const double n = static_cast<double>(p.predicted.size());
  TripMetrics m;
  m.trip_id = p.trip_id;
  m.n_points = p.predicted.size();
  m.mse = sq / n;
  m.rmse = std::sqrt(m.mse);
  m.mae = abs_sum / n;
  return m;
}

MetricsReport aggregate(std::span<const TripMetrics> per_trip) {
  if (per_trip.empty()) throw std::invalid_argument("aggregate: no trips");
  MetricsReport r;
  r.per_trip.assign(per_trip.begin(), per_trip.end());
  for (const auto& t : per_trip) {
    r.rmse += t.rmse;
    r.mse += t.mse;
    r.mae += t.mae;
    r.n_points += t.n_points;
  }
  r.n_trips = per_trip.size();
  const double n = static_cast<double>(r.n_trips);
  r.rmse /= n;
  r.mse /= n;
  r.mae /= n;
  return r;
}

Evaluation evaluate(const nn::Model& model, std::span<const FeaturizedTrip> trips,
                    const SchemeConfig& scheme, double sentinel, int threads) {
  const std::size_t minimum = min_trip_length(scheme);
  std::vector<const FeaturizedTrip*> usable;
  Evaluation ev;
  for (const auto& t : trips) {
    if (t.size() >= minimum) usable.push_back(&t);
    else ++ev.skipped_trips;
  }
  if (usable.empty()) throw std::invalid_argument("evaluate: no trip is long enough for the scheme");

  ev.predictions.resize(usable.size());
  std::vector<std::exception_ptr> errors(usable.size());
  const auto work = [&](std::size_t begin, std::size_t stride) {
    for (std::size_t i = begin; i < usable.size(); i += stride) {
      try {
        ev.predictions[i] = predict_trip(model, *usable[i], scheme, sentinel);
      } catch (...) {
        errors[i] = std::current_exception();
      }
    }
  };
  const auto workers = static_cast<std::size_t>(std::max(1, threads));
  if (workers == 1) {
    work(0, 1);
  } else {
    std::vector<std::jthread> pool;
    for (std::size_t t = 0; t < workers; ++t) pool.emplace_back(work, t, workers);
  }
  for (auto& e : errors)
    if (e) std::rethrow_exception(e);

  std::vector<TripMetrics> per_trip;
  std::size_t negatives = 0;
  for (const auto& p : ev.predictions) {
    per_trip.push_back(trip_metrics(p));
    for (double v : p.predicted) negatives += v < 0.0;
  }
  ev.report = aggregate(per_trip);
  ev.report.negative_predictions = negatives;
  ev.report.scheme = std::string(scheme_name(scheme.scheme));
  return ev;
}

std::string serialize_report(const MetricsReport& r) {
  nlohmann::ordered_json j;
  j["scheme"] = r.scheme;
  j["n_trips"] = r.n_trips;
  j["n_points"] = r.n_points;
  j["rmse"] = r.rmse;
  j["mse"] = r.mse;
  j["mae"] = r.mae;
  j["negative_predictions"] = r.negative_predictions;
  auto& trips = j["per_trip"] = nlohmann::ordered_json::array();
  for (const auto& t : r.per_trip) {
    nlohmann::ordered_json e;
    e["trip_id"] = t.trip_id;
    e["n_points"] = t.n_points;
    e["rmse"] = t.rmse;
    e["mse"] = t.mse;
    e["mae"] = t.mae;
    trips.push_back(std::move(e));
  }
  return j.dump(2) + "\n";
}

MetricsReport parse_report(const std::string& json_text, const std::string& source_name) {
  try {
    const auto j = nlohmann::json::parse(json_text);
    MetricsReport r;
    r.scheme = j.at("scheme").get<std::string>();
    r.n_trips = j.at("n_trips").get<std::size_t>();
    r.n_points = j.at("n_points").get<std::size_t>();
    r.rmse = j.at("rmse").get<double>();
    r.mse = j.at("mse").get<double>();
    r.mae = j.at("mae").get<double>();
    r.negative_predictions = j.at("negative_predictions").get<std::size_t>();
    for (const auto& e : j.at("per_trip"))
      r.per_trip.push_back({e.at("trip_id").get<std::int64_t>(), e.at("n_points").get<std::size_t>(),
                            e.at("rmse").get<double>(), e.at("mse").get<double>(), e.at("mae").get<double>()});
    return r;
  } catch (const nlohmann::json::exception& e) {
    throw ParseError(source_name, 1, e.what());
  }
}

}  // namespace swmlp
