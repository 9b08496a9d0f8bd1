#include "swmlp/association.hpp"

#include <sstream>

#include "swmlp/errors.hpp"
#include "swmlp/text_io.hpp"

namespace swmlp {

std::string_view scheme_name(Scheme s) {
  switch (s) {
    case Scheme::Past: return "pa";
    case Scheme::PastFuture: return "pf";
    case Scheme::PunctualPast: return "pup";
    case Scheme::Pointwise: return "baseline";
  }
  return "?";
}

std::optional<Scheme> parse_scheme(std::string_view name) {
  if (name == "pa") return Scheme::Past;
  if (name == "pf") return Scheme::PastFuture;
  if (name == "pup") return Scheme::PunctualPast;
  if (name == "baseline") return Scheme::Pointwise;
  return std::nullopt;
}

FeatureVector mask_target_pat(const FeatureVector& v, double sentinel) {
  FeatureVector out = v;
  out[kPat] = sentinel;
  return out;
}

namespace {

void require_length(const FeaturizedTrip& trip, std::size_t minimum, Scheme s) {
  if (trip.size() < minimum)
    throw DomainError("trip " + std::to_string(trip.trip_id) + " has " + std::to_string(trip.size()) +
                      " points; scheme " + std::string(scheme_name(s)) + " needs at least " +
                      std::to_string(minimum));
}

AssociatedSample make(const FeaturizedTrip& trip, std::size_t a, std::size_t b, std::size_t t,
                      Scheme s, double sentinel) {
  return {trip.features[a], trip.features[b], mask_target_pat(trip.features[t], sentinel),
          trip.speeds[t], {trip.trip_id, t, s}};
}

}  // namespace

std::vector<AssociatedSample> build_pa(const FeaturizedTrip& trip, double sentinel) {
  require_length(trip, 3, Scheme::Past);
  std::vector<AssociatedSample> out;
  out.reserve(trip.size() - 2);
  for (std::size_t t = 2; t < trip.size(); ++t)
    out.push_back(make(trip, t - 2, t - 1, t, Scheme::Past, sentinel));
  return out;
}

std::vector<AssociatedSample> build_pf(const FeaturizedTrip& trip, double sentinel) {
  require_length(trip, 3, Scheme::PastFuture);
  std::vector<AssociatedSample> out;
  out.reserve(trip.size() - 2);
  for (std::size_t t = 1; t + 1 < trip.size(); ++t)
    out.push_back(make(trip, t - 1, t + 1, t, Scheme::PastFuture, sentinel));
  return out;
}

std::vector<AssociatedSample> build_pup(const FeaturizedTrip& trip, int near, int far,
                                        double sentinel) {
  if (near < 1 || far <= near)
    throw DomainError("punctual-past offsets need 0 < near < far, got (" + std::to_string(near) +
                      ", " + std::to_string(far) + ")");
  const auto n = static_cast<std::size_t>(near), f = static_cast<std::size_t>(far);
  require_length(trip, f + 1, Scheme::PunctualPast);
  std::vector<AssociatedSample> out;
  out.reserve(trip.size() - f);
  for (std::size_t t = f; t < trip.size(); ++t)
    out.push_back(make(trip, t - f, t - n, t, Scheme::PunctualPast, sentinel));
  return out;
}

std::vector<AssociatedSample> build_pointwise(const FeaturizedTrip& trip) {
  require_length(trip, 1, Scheme::Pointwise);
  std::vector<AssociatedSample> out;
  out.reserve(trip.size());
  for (std::size_t t = 0; t < trip.size(); ++t)
    out.push_back({{}, {}, trip.features[t], trip.speeds[t], {trip.trip_id, t, Scheme::Pointwise}});
  return out;
}

std::vector<AssociatedSample> build_samples(const FeaturizedTrip& trip, const SchemeConfig& cfg,
                                            double sentinel) {
  switch (cfg.scheme) {
    case Scheme::Past: return build_pa(trip, sentinel);
    case Scheme::PastFuture: return build_pf(trip, sentinel);
    case Scheme::PunctualPast: return build_pup(trip, cfg.pup_near, cfg.pup_far, sentinel);
    case Scheme::Pointwise: return build_pointwise(trip);
  }
  return {};
}

std::size_t min_trip_length(const SchemeConfig& cfg) {
  switch (cfg.scheme) {
    case Scheme::Past:
    case Scheme::PastFuture: return 3;
    case Scheme::PunctualPast: return static_cast<std::size_t>(cfg.pup_far) + 1;
    case Scheme::Pointwise: return 1;
  }
  return 1;
}

std::vector<std::size_t> target_indices(std::size_t n, const SchemeConfig& cfg) {
  std::vector<std::size_t> out;
  if (n < min_trip_length(cfg)) return out;
  std::size_t first = 0, last = n;  // [first, last)
  switch (cfg.scheme) {
    case Scheme::Past: first = 2; break;
    case Scheme::PastFuture: first = 1; last = n - 1; break;
    case Scheme::PunctualPast: first = static_cast<std::size_t>(cfg.pup_far); break;
    case Scheme::Pointwise: break;
  }
  for (std::size_t t = first; t < last; ++t) out.push_back(t);
  return out;
}

std::vector<AssociatedSample> build_dataset(std::span<const FeaturizedTrip> trips,
                                            const SchemeConfig& cfg, double sentinel,
                                            std::size_t* skipped) {
  std::vector<AssociatedSample> out;
  std::size_t short_trips = 0;
  const std::size_t minimum = min_trip_length(cfg);
  for (const auto& t : trips) {
    if (t.size() < minimum) {
      ++short_trips;
      continue;
    }
    auto s = build_samples(t, cfg, sentinel);
    out.insert(out.end(), s.begin(), s.end());
  }
  if (skipped) *skipped = short_trips;
  return out;
}

namespace {

const std::string& sample_header() {
  static const std::string h = [] {
    std::string s = "trip_id,target_index,scheme";
    for (const char* slot : {"a", "b", "t"})
      for (const char* name : kFeatureNames) s += std::string(",") + slot + "_" + name;
    return s + ",label";
  }();
  return h;
}

}  // namespace

std::string serialize_samples(std::span<const AssociatedSample> samples) {
  std::string out = sample_header() + "\n";
  for (const auto& s : samples) {
    out += std::to_string(s.provenance.trip_id) + ',' + std::to_string(s.provenance.target_index) +
           ',' + std::string(scheme_name(s.provenance.scheme));
    for (const auto* v : {&s.context_a, &s.context_b, &s.target}) out += ',' + text::join_doubles(*v, ',');
    out += ',' + text::format_double(s.label) + '\n';
  }
  return out;
}

std::vector<AssociatedSample> parse_samples(const std::string& text, const std::string& source_name) {
  std::istringstream in(text);
  std::string raw;
  std::size_t line_no = 0;
  bool header_seen = false;
  std::vector<AssociatedSample> out;
  constexpr std::size_t kFields = 3 + 3 * kFeatureCount + 1;

  while (std::getline(in, raw)) {
    ++line_no;
    auto line = text::trim(raw);
    if (line.empty() || line.front() == '#') continue;
    if (!header_seen) {
      if (line != sample_header()) throw ParseError(source_name, line_no, "unexpected column header");
      header_seen = true;
      continue;
    }
    auto f = text::split(line, ',');
    if (f.size() != kFields)
      throw ParseError(source_name, line_no, "expected " + std::to_string(kFields) + " fields");
    AssociatedSample s;
    try {
      s.provenance.trip_id = text::parse_int(f[0]);
      const auto idx = text::parse_int(f[1]);
      if (idx < 0) throw std::invalid_argument("negative target_index");
      s.provenance.target_index = static_cast<std::size_t>(idx);
      auto scheme = parse_scheme(text::trim(f[2]));
      if (!scheme) throw std::invalid_argument("unknown scheme '" + std::string(f[2]) + "'");
      s.provenance.scheme = *scheme;
      std::size_t k = 3;
      for (auto* v : {&s.context_a, &s.context_b, &s.target})
        for (auto& x : *v) x = text::parse_double(f[k++]);
      s.label = text::parse_double(f[k]);
    } catch (const std::invalid_argument& e) {
      throw ParseError(source_name, line_no, e.what());
    }
    out.push_back(s);
  }
  if (!header_seen) throw ParseError(source_name, line_no, "missing column header");
  return out;
}

std::vector<AssociatedSample> load_samples(const std::filesystem::path& path) {
  return parse_samples(text::read_file(path), path.string());
}

void save_samples(std::span<const AssociatedSample> samples, const std::filesystem::path& path) {
  text::write_file(path, serialize_samples(samples));
}

}  // namespace swmlp
