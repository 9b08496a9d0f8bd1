#include "swmlp/trips.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <random>
#include <set>
#include <sstream>
#include <thread>

#include "swmlp/errors.hpp"
#include "swmlp/text_io.hpp"

namespace swmlp {

std::vector<std::string> SimConfig::problems() const {
  std::vector<std::string> out;
  if (n_trips < 1) out.push_back("n_trips must be >= 1");
  if (mean_trip_len < 3) out.push_back("mean_trip_len must be >= 3");
  if (!(noise_sigma >= 0.0)) out.push_back("noise_sigma must be >= 0");
  if (!(step_m > 0.0)) out.push_back("step_m must be > 0");
  if (!(stop_probability >= 0.0 && stop_probability <= 1.0))
    out.push_back("stop_probability must lie in [0, 1]");
  if (!(accel_mps2 > 0.0)) out.push_back("accel_mps2 must be > 0");
  if (!(brake_mps2 > 0.0)) out.push_back("brake_mps2 must be > 0");
  if (threads < 1) out.push_back("threads must be >= 1");
  return out;
}

double cruise_cap(int lanes, int priority) { return 4.0 + 2.5 * priority + 1.5 * lanes; }

double cruise_speed(const Link& link) {
  return std::min(link.speed_limit, cruise_cap(link.lanes, link.priority));
}

namespace {

struct PathLink {
  const Link* link;
  double start_s;  // arc length at link entry
  double cruise;
  bool stops_at_end = false;
};

struct Sample {
  std::size_t path_index;
  double position;
};

std::mt19937_64 trip_stream(std::uint64_t seed, std::uint64_t index) {
  std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                    static_cast<std::uint32_t>(index), static_cast<std::uint32_t>(index >> 32)};
  return std::mt19937_64(seq);
}

// Fastest profile under the cruise caps, the boundary/stop constraints and the
// acceleration limits: the pointwise minimum of every constraint's envelope.
double profile_speed(const std::vector<PathLink>& path, const Sample& s, const SimConfig& cfg) {
  const PathLink& here = path[s.path_index];
  const double arc = here.start_s + s.position;
  double v = here.cruise;

  const auto forward = [&](double s_c, double v_c) {
    if (arc >= s_c) v = std::min(v, std::sqrt(v_c * v_c + 2.0 * cfg.accel_mps2 * (arc - s_c)));
  };
  const auto backward = [&](double s_c, double v_c) {
    if (arc <= s_c) v = std::min(v, std::sqrt(v_c * v_c + 2.0 * cfg.brake_mps2 * (s_c - arc)));
  };

  forward(0.0, path.front().cruise);
  for (std::size_t i = 0; i + 1 < path.size(); ++i) {
    const double boundary = path[i + 1].start_s;
    const double vb = path[i].stops_at_end ? 0.0 : std::min(path[i].cruise, path[i + 1].cruise);
    forward(boundary, vb);
    backward(boundary, vb);
  }
  return v;
}

Trip simulate_one(const LinkMap& map, const std::vector<const Link*>& all_links,
                  const SimConfig& cfg, std::size_t index) {
  auto rng = trip_stream(cfg.seed, index);
  std::uniform_int_distribution<std::size_t> pick_start(0, all_links.size() - 1);
  const int lo = std::max(3, cfg.mean_trip_len - cfg.mean_trip_len / 2);
  const int hi = std::max(lo, cfg.mean_trip_len + cfg.mean_trip_len / 2);
  std::uniform_int_distribution<int> pick_len(lo, hi);
  std::bernoulli_distribution stops(cfg.stop_probability);
  std::normal_distribution<double> noise(0.0, 1.0);

  const Link* start = all_links[pick_start(rng)];
  const auto target = static_cast<std::size_t>(pick_len(rng));

  std::vector<PathLink> path;
  std::vector<Sample> samples;
  const auto enter = [&](const Link* link, double start_s) {
    PathLink pl{link, start_s, cruise_speed(*link)};
    if (link->light_at_end) pl.stops_at_end = stops(rng);
    path.push_back(pl);
  };

  enter(start, 0.0);
  samples.push_back({0, 0.0});
  bool sampled_here = true;
  double pos = 0.0;
  double carry = cfg.step_m;

  while (samples.size() < target) {
    const PathLink& cur = path.back();
    const double len = cur.link->length;
    if (pos + carry <= len) {
      pos += carry;
      carry = cfg.step_m;
      samples.push_back({path.size() - 1, pos});
      sampled_here = true;
      continue;
    }
    carry -= len - pos;
    // Links shorter than the step still get one registration.
    if (!sampled_here) {
      samples.push_back({path.size() - 1, len / 2.0});
      if (samples.size() >= target) break;
    }
    if (cur.stops_at_end) {
      samples.push_back({path.size() - 1, len});
      if (samples.size() >= target) break;
    }
    const auto& succ = cur.link->successors;
    if (succ.empty()) break;
    std::uniform_int_distribution<std::size_t> pick_next(0, succ.size() - 1);
    const Link* next = &map.at(succ[pick_next(rng)]);
    enter(next, cur.start_s + len);
    pos = 0.0;
    sampled_here = false;
  }

  if (samples.size() < 3)
    throw ValidationError({"trip " + std::to_string(cfg.first_trip_id + static_cast<std::int64_t>(index)) +
                           " reached a dead end after " + std::to_string(samples.size()) +
                           " points (minimum 3)"});

  Trip trip;
  trip.trip_id = cfg.first_trip_id + static_cast<std::int64_t>(index);
  trip.points.reserve(samples.size());
  for (const Sample& s : samples) {
    double v = profile_speed(path, s, cfg);
    if (cfg.noise_sigma > 0.0) v = std::max(0.0, v + cfg.noise_sigma * noise(rng));
    trip.points.push_back({path[s.path_index].link->id, s.position, v});
  }
  return trip;
}

}  // namespace

std::vector<Trip> simulate_trips(const LinkMap& map, const SimConfig& cfg) {
  if (auto p = cfg.problems(); !p.empty()) throw ValidationError(std::move(p));
  if (map.links.empty()) throw ValidationError({"link map has no links"});
  if (auto v = validate(map); !v.empty()) {
    std::vector<std::string> msgs;
    for (const auto& x : v) msgs.push_back(x.to_string());
    throw ValidationError(std::move(msgs));
  }

  std::vector<const Link*> all_links;
  for (const auto& [id, link] : map.links) all_links.push_back(&link);

  const auto n = static_cast<std::size_t>(cfg.n_trips);
  std::vector<Trip> trips(n);
  std::vector<std::exception_ptr> errors(n);
  const auto work = [&](std::size_t begin, std::size_t stride) {
    for (std::size_t i = begin; i < n; i += stride) {
      try {
        trips[i] = simulate_one(map, all_links, cfg, i);
      } catch (...) {
        errors[i] = std::current_exception();
      }
    }
  };

  const auto threads = static_cast<std::size_t>(std::min<int>(cfg.threads, cfg.n_trips));
  if (threads <= 1) {
    work(0, 1);
  } else {
    std::vector<std::jthread> pool;
    for (std::size_t t = 0; t < threads; ++t) pool.emplace_back(work, t, threads);
  }
  for (auto& e : errors)
    if (e) std::rethrow_exception(e);
  return trips;
}

std::vector<std::string> check_trip(const Trip& trip, const LinkMap& map) {
  std::vector<std::string> out;
  const std::string who = "trip " + std::to_string(trip.trip_id);
  if (trip.points.empty()) out.push_back(who + ": no points");
  for (std::size_t i = 0; i < trip.points.size(); ++i) {
    const DataPoint& p = trip.points[i];
    const std::string at = who + " point " + std::to_string(i);
    auto it = map.links.find(p.link_id);
    if (it == map.links.end()) {
      out.push_back(at + ": unknown link id " + std::to_string(p.link_id));
      continue;
    }
    const Link& link = it->second;
    if (!(p.position_on_link >= 0.0 && p.position_on_link <= link.length))
      out.push_back(at + ": position " + text::format_double(p.position_on_link) +
                    " outside link " + std::to_string(link.id) + " of length " +
                    text::format_double(link.length));
    if (!(p.speed >= 0.0)) out.push_back(at + ": negative speed");
    if (i == 0) continue;
    const DataPoint& prev = trip.points[i - 1];
    if (!map.contains(prev.link_id)) continue;
    if (prev.link_id == p.link_id) {
      if (p.position_on_link < prev.position_on_link)
        out.push_back(at + ": position decreases within link " + std::to_string(p.link_id));
    } else {
      const auto& succ = map.at(prev.link_id).successors;
      if (std::find(succ.begin(), succ.end(), p.link_id) == succ.end())
        out.push_back(at + ": adjacency violation, link " + std::to_string(p.link_id) +
                      " is not a successor of " + std::to_string(prev.link_id));
    }
  }
  return out;
}

std::vector<Trip> parse_trips(const std::string& text, const LinkMap& map,
                              const std::string& source_name, TripLoadStats* stats) {
  std::istringstream in(text);
  std::string raw;
  std::size_t line_no = 0;
  bool header_seen = false;

  std::vector<Trip> trips;
  std::set<std::int64_t> finished;
  std::vector<std::string> problems;

  while (std::getline(in, raw)) {
    ++line_no;
    auto line = text::trim(raw);
    if (line.empty() || line.front() == '#') continue;
    if (!header_seen) {
      if (line != "trip_id,sequence_index,link_id,position_m,speed_mps")
        throw ParseError(source_name, line_no, "unexpected header '" + std::string(line) + "'");
      header_seen = true;
      continue;
    }
    auto f = text::split(line, ',');
    if (f.size() != 5)
      throw ParseError(source_name, line_no, "expected 5 fields, got " + std::to_string(f.size()));
    std::int64_t trip_id = 0, seq = 0;
    DataPoint p;
    try {
      trip_id = text::parse_int(f[0]);
      seq = text::parse_int(f[1]);
      p.link_id = text::parse_int(f[2]);
      p.position_on_link = text::parse_double(f[3]);
      p.speed = text::parse_double(f[4]);
    } catch (const std::invalid_argument& e) {
      throw ParseError(source_name, line_no, e.what());
    }

    if (trips.empty() || trips.back().trip_id != trip_id) {
      if (!trips.empty()) finished.insert(trips.back().trip_id);
      if (finished.count(trip_id))
        throw ParseError(source_name, line_no,
                         "rows of trip " + std::to_string(trip_id) + " are not contiguous");
      trips.push_back(Trip{trip_id, {}});
    }
    Trip& t = trips.back();
    if (seq != static_cast<std::int64_t>(t.points.size()))
      throw ParseError(source_name, line_no,
                       "sequence_index " + std::to_string(seq) + " out of order (expected " +
                           std::to_string(t.points.size()) + ")");

    const std::string locus = source_name + ":" + std::to_string(line_no) + ": ";
    auto it = map.links.find(p.link_id);
    if (it == map.links.end()) {
      problems.push_back(locus + "unknown link id " + std::to_string(p.link_id));
    } else {
      if (!(p.position_on_link >= 0.0 && p.position_on_link <= it->second.length))
        problems.push_back(locus + "position " + text::format_double(p.position_on_link) +
                           " outside link " + std::to_string(p.link_id) + " of length " +
                           text::format_double(it->second.length));
      if (!t.points.empty()) {
        const DataPoint& prev = t.points.back();
        if (prev.link_id == p.link_id) {
          if (p.position_on_link < prev.position_on_link)
            problems.push_back(locus + "position decreases within link " + std::to_string(p.link_id));
        } else if (map.contains(prev.link_id)) {
          const auto& succ = map.at(prev.link_id).successors;
          if (std::find(succ.begin(), succ.end(), p.link_id) == succ.end())
            problems.push_back(locus + "adjacency violation, link " + std::to_string(p.link_id) +
                               " is not a successor of " + std::to_string(prev.link_id));
        }
      }
    }
    if (!(p.speed >= 0.0)) problems.push_back(locus + "negative speed");
    t.points.push_back(p);
  }
  if (!header_seen) throw ParseError(source_name, line_no, "missing header");
  if (!problems.empty()) throw ValidationError(std::move(problems));

  std::size_t before = trips.size();
  std::erase_if(trips, [](const Trip& t) { return t.points.size() < 3; });
  if (stats) stats->discarded_short = before - trips.size();
  return trips;
}

std::vector<Trip> load_trips(const std::filesystem::path& path, const LinkMap& map,
                             TripLoadStats* stats) {
  return parse_trips(text::read_file(path), map, path.string(), stats);
}

std::string serialize_trips(const std::vector<Trip>& trips) {
  std::string out = "trip_id,sequence_index,link_id,position_m,speed_mps\n";
  for (const Trip& t : trips)
    for (std::size_t i = 0; i < t.points.size(); ++i) {
      const DataPoint& p = t.points[i];
      out += std::to_string(t.trip_id) + ',' + std::to_string(i) + ',' + std::to_string(p.link_id) +
             ',' + text::format_double(p.position_on_link) + ',' + text::format_double(p.speed) + '\n';
    }
  return out;
}

void save_trips(const std::vector<Trip>& trips, const std::filesystem::path& path) {
  text::write_file(path, serialize_trips(trips));
}

DatasetSplit split_by_region(std::vector<Trip> train, std::vector<Trip> val,
                             std::vector<Trip> test) {
  std::map<std::int64_t, std::vector<std::string>> owners;
  for (const auto& t : train) owners[t.trip_id].push_back("train");
  for (const auto& t : val) owners[t.trip_id].push_back("val");
  for (const auto& t : test) owners[t.trip_id].push_back("test");

  std::vector<std::string> problems;
  for (const auto& [id, where] : owners)
    if (where.size() > 1) {
      std::string msg = "trip id " + std::to_string(id) + " appears in";
      for (const auto& w : where) msg += " " + w;
      problems.push_back(msg);
    }
  if (!problems.empty()) throw ValidationError(std::move(problems));

  DatasetSplit split{std::move(train), std::move(val), std::move(test)};
  split.empty_test = split.test.empty();
  return split;
}

}  // namespace swmlp
