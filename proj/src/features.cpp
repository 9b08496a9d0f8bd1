#include "swmlp/features.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "json.hpp"
#include "swmlp/errors.hpp"
#include "swmlp/text_io.hpp"

namespace swmlp {

double pat(double position_on_link, double link_length) {
  if (!(link_length > 0.0)) throw DomainError("pat: link length must be positive");
  if (!(position_on_link >= 0.0 && position_on_link <= link_length))
    throw DomainError("pat: position " + text::format_double(position_on_link) +
                      " outside [0, " + text::format_double(link_length) + "]");
  return position_on_link * 100.0 / link_length;
}

FeatureVector featurize_point(const LinkMap& map, const DataPoint& p) {
  const Link& link = map.at(p.link_id);
  FeatureVector v{};
  v[kPriority] = link.priority;
  v[kLightStart] = link.light_at_start ? 1.0 : 0.0;
  v[kLightEnd] = link.light_at_end ? 1.0 : 0.0;
  v[kNeighborCount] = static_cast<double>(neighbor_count(map, link.id));
  v[kLanes] = link.lanes;
  v[kSpeedLimit] = link.speed_limit;
  v[kLinkLength] = link.length;
  v[kPat] = pat(p.position_on_link, link.length);
  return v;
}

NormStats fit_norm(std::span<const FeatureVector> train_vectors) {
  if (train_vectors.empty()) throw DomainError("fit_norm: empty training set");
  NormStats s;
  const double n = static_cast<double>(train_vectors.size());
  for (std::size_t c = 0; c < kFeatureCount; ++c) {
    const double first = train_vectors.front()[c];
    double sum = 0.0;
    bool constant = true;
    for (const auto& v : train_vectors) {
      sum += v[c];
      constant = constant && v[c] == first;
    }
    if (constant) {
      s.mean[c] = first;
      s.std[c] = 1.0;
      s.constant[c] = true;
      continue;
    }
    const double mean = sum / n;
    double sq = 0.0;
    for (const auto& v : train_vectors) sq += (v[c] - mean) * (v[c] - mean);
    s.mean[c] = mean;
    s.std[c] = std::sqrt(sq / n);
  }
  return s;
}

FeatureVector apply_norm(const FeatureVector& v, const NormStats& stats) {
  FeatureVector out{};
  for (std::size_t c = 0; c < kFeatureCount; ++c) out[c] = (v[c] - stats.mean[c]) / stats.std[c];
  return out;
}

FeatureVector invert_norm(const FeatureVector& v, const NormStats& stats) {
  FeatureVector out{};
  for (std::size_t c = 0; c < kFeatureCount; ++c) out[c] = v[c] * stats.std[c] + stats.mean[c];
  return out;
}

FeaturizedTrip featurize_trip(const LinkMap& map, const Trip& trip) {
  FeaturizedTrip ft;
  ft.trip_id = trip.trip_id;
  ft.features.reserve(trip.points.size());
  ft.speeds.reserve(trip.points.size());
  for (const auto& p : trip.points) {
    ft.features.push_back(featurize_point(map, p));
    ft.speeds.push_back(p.speed);
  }
  return ft;
}

std::vector<FeaturizedTrip> featurize_trips(const LinkMap& map, std::span<const Trip> trips) {
  std::vector<FeaturizedTrip> out;
  out.reserve(trips.size());
  for (const auto& t : trips) out.push_back(featurize_trip(map, t));
  return out;
}

std::vector<FeatureVector> collect_vectors(std::span<const FeaturizedTrip> trips) {
  std::vector<FeatureVector> out;
  for (const auto& t : trips) out.insert(out.end(), t.features.begin(), t.features.end());
  return out;
}

std::vector<FeaturizedTrip> normalize(std::span<const FeaturizedTrip> trips, const NormStats& stats) {
  std::vector<FeaturizedTrip> out(trips.begin(), trips.end());
  for (auto& t : out)
    for (auto& v : t.features) v = apply_norm(v, stats);
  return out;
}

namespace {

constexpr const char* kMagic = "# swmlp-features v1";

std::string header_row() {
  std::string h = "trip_id,sequence_index";
  for (const char* name : kFeatureNames) h += std::string(",") + name;
  return h + ",speed_mps";
}

}  // namespace

std::string serialize_norm_stats(const NormStats& stats) {
  nlohmann::ordered_json j;
  j["mean"] = stats.mean;
  j["std"] = stats.std;
  j["constant"] = stats.constant;
  return j.dump();
}

NormStats parse_norm_stats(const std::string& text, const std::string& source_name) {
  try {
    auto j = nlohmann::json::parse(text);
    NormStats s;
    s.mean = j.at("mean").get<FeatureVector>();
    s.std = j.at("std").get<FeatureVector>();
    s.constant = j.at("constant").get<std::array<bool, kFeatureCount>>();
    for (std::size_t c = 0; c < kFeatureCount; ++c)
      if (!(s.std[c] > 0.0)) throw ParseError(source_name, 1, "non-positive std in column " + std::to_string(c));
    return s;
  } catch (const nlohmann::json::exception& e) {
    throw ParseError(source_name, 1, std::string("bad normalization stats: ") + e.what());
  }
}

std::string serialize_feature_dataset(const FeatureDataset& ds) {
  std::string out = std::string(kMagic) + "\n# stats " + serialize_norm_stats(ds.stats) + "\n" +
                    header_row() + "\n";
  for (const auto& t : ds.trips)
    for (std::size_t i = 0; i < t.size(); ++i) {
      out += std::to_string(t.trip_id) + ',' + std::to_string(i) + ',';
      out += text::join_doubles(t.features[i], ',');
      out += ',' + text::format_double(t.speeds[i]) + '\n';
    }
  return out;
}

FeatureDataset parse_feature_dataset(const std::string& text, const std::string& source_name) {
  std::istringstream in(text);
  std::string raw;
  std::size_t line_no = 0;
  FeatureDataset ds;
  bool stats_seen = false, header_seen = false;

  while (std::getline(in, raw)) {
    ++line_no;
    auto line = text::trim(raw);
    if (line.empty()) continue;
    if (line_no == 1) {
      if (line != kMagic) throw ParseError(source_name, line_no, "not a featurized dataset");
      continue;
    }
    if (line.starts_with("# stats ")) {
      ds.stats = parse_norm_stats(std::string(line.substr(8)), source_name);
      stats_seen = true;
      continue;
    }
    if (line.front() == '#') continue;
    if (!header_seen) {
      if (line != header_row()) throw ParseError(source_name, line_no, "unexpected column header");
      header_seen = true;
      continue;
    }
    auto f = text::split(line, ',');
    if (f.size() != kFeatureCount + 3)
      throw ParseError(source_name, line_no, "expected " + std::to_string(kFeatureCount + 3) + " fields");
    try {
      const std::int64_t id = text::parse_int(f[0]);
      const auto seq = text::parse_int(f[1]);
      if (ds.trips.empty() || ds.trips.back().trip_id != id) ds.trips.push_back({id, {}, {}});
      auto& t = ds.trips.back();
      if (seq != static_cast<long long>(t.size()))
        throw ParseError(source_name, line_no, "sequence_index out of order");
      FeatureVector v{};
      for (std::size_t c = 0; c < kFeatureCount; ++c) v[c] = text::parse_double(f[2 + c]);
      t.features.push_back(v);
      t.speeds.push_back(text::parse_double(f[2 + kFeatureCount]));
    } catch (const std::invalid_argument& e) {
      throw ParseError(source_name, line_no, e.what());
    }
  }
  if (!stats_seen) throw ParseError(source_name, line_no, "missing '# stats' header");
  if (!header_seen) throw ParseError(source_name, line_no, "missing column header");
  return ds;
}

FeatureDataset load_feature_dataset(const std::filesystem::path& path) {
  return parse_feature_dataset(text::read_file(path), path.string());
}

void save_feature_dataset(const FeatureDataset& ds, const std::filesystem::path& path) {
  text::write_file(path, serialize_feature_dataset(ds));
}

}  // namespace swmlp
