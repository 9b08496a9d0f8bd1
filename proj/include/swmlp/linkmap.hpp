#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <string>
#include <vector>

namespace swmlp {

using LinkId = std::int64_t;

/// A continuous road section between two discontinuities (intersection, signal, ...).
struct Link {
  LinkId id = 0;
  int priority = 0;  // functional class, 0 (minor street) .. 5 (highway class)
  bool light_at_start = false;
  bool light_at_end = false;
  int lanes = 1;
  double speed_limit = 0.0;  // m/s
  double length = 0.0;       // m
  std::vector<LinkId> successors;
  std::vector<LinkId> predecessors;

  bool operator==(const Link&) const = default;
};

struct LinkMap {
  std::map<LinkId, Link> links;
  std::string region_tag;

  const Link& at(LinkId id) const;
  bool contains(LinkId id) const { return links.count(id) != 0; }

  bool operator==(const LinkMap&) const = default;
};

/// One broken rule. `rule` is a stable short name, e.g. "dangling_successor".
struct Violation {
  LinkId link = 0;
  std::string rule;
  std::string detail;

  std::string to_string() const;
};

constexpr int kMaxPriority = 5;

std::vector<Violation> validate(const LinkMap& map);

/// Distinct ids in successors ∪ predecessors, self excluded.
std::size_t neighbor_count(const LinkMap& map, LinkId id);

/// Fills every link's predecessor list from the successor lists.
void derive_predecessors(LinkMap& map);

LinkMap parse_linkmap(const std::string& text, const std::string& source_name = "<memory>");
LinkMap load_linkmap(const std::filesystem::path& path);
std::string serialize_linkmap(const LinkMap& map);
void save_linkmap(const LinkMap& map, const std::filesystem::path& path);

inline double kmh_to_mps(double kmh) { return kmh / 3.6; }
inline double mps_to_kmh(double mps) { return mps * 3.6; }

}  // namespace swmlp
