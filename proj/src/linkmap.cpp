#include "swmlp/linkmap.hpp"

#include <algorithm>
#include <set>
#include <sstream>

#include "json.hpp"
#include "swmlp/errors.hpp"
#include "swmlp/text_io.hpp"

namespace swmlp {

using nlohmann::json;

const Link& LinkMap::at(LinkId id) const {
  auto it = links.find(id);
  if (it == links.end()) throw std::out_of_range("unknown link id " + std::to_string(id));
  return it->second;
}

std::string Violation::to_string() const {
  return "link " + std::to_string(link) + ": " + rule + (detail.empty() ? "" : " (" + detail + ")");
}

namespace {

bool contains(const std::vector<LinkId>& v, LinkId id) {
  return std::find(v.begin(), v.end(), id) != v.end();
}

void check_list(const LinkMap& map, const Link& link, const std::vector<LinkId>& list,
                const char* which, std::vector<Violation>& out) {
  std::set<LinkId> seen;
  for (LinkId n : list) {
    if (!seen.insert(n).second)
      out.push_back({link.id, std::string("duplicate_") + which, "id " + std::to_string(n)});
    if (n == link.id) {
      out.push_back({link.id, "self_loop", which});
      continue;
    }
    if (!map.contains(n))
      out.push_back({link.id, std::string("dangling_") + which, "id " + std::to_string(n)});
  }
}

}  // namespace

std::vector<Violation> validate(const LinkMap& map) {
  std::vector<Violation> out;
  for (const auto& [key, link] : map.links) {
    if (key != link.id) out.push_back({key, "key_mismatch", "record id " + std::to_string(link.id)});
    if (!(link.length > 0.0))
      out.push_back({link.id, "non_positive_length", text::format_double(link.length)});
    if (link.lanes < 1) out.push_back({link.id, "lanes_range", std::to_string(link.lanes)});
    if (!(link.speed_limit > 0.0))
      out.push_back({link.id, "non_positive_speed_limit", text::format_double(link.speed_limit)});
    if (link.priority < 0 || link.priority > kMaxPriority)
      out.push_back({link.id, "priority_range", std::to_string(link.priority)});
    check_list(map, link, link.successors, "successor", out);
    check_list(map, link, link.predecessors, "predecessor", out);

    for (LinkId s : link.successors) {
      auto it = map.links.find(s);
      if (it != map.links.end() && s != link.id && !contains(it->second.predecessors, link.id))
        out.push_back({link.id, "asymmetric_adjacency",
                       "successor " + std::to_string(s) + " does not list it as predecessor"});
    }
    for (LinkId p : link.predecessors) {
      auto it = map.links.find(p);
      if (it != map.links.end() && p != link.id && !contains(it->second.successors, link.id))
        out.push_back({link.id, "asymmetric_adjacency",
                       "predecessor " + std::to_string(p) + " does not list it as successor"});
    }
  }
  return out;
}

std::size_t neighbor_count(const LinkMap& map, LinkId id) {
  const Link& link = map.at(id);
  std::set<LinkId> all(link.successors.begin(), link.successors.end());
  all.insert(link.predecessors.begin(), link.predecessors.end());
  all.erase(id);
  return all.size();
}

void derive_predecessors(LinkMap& map) {
  for (auto& [id, link] : map.links) link.predecessors.clear();
  for (const auto& [id, link] : map.links)
    for (LinkId s : link.successors) {
      auto it = map.links.find(s);
      if (it != map.links.end()) it->second.predecessors.push_back(id);
    }
}

namespace {

template <typename T>
T require_field(const json& rec, const char* name, const std::string& src, std::size_t line) {
  if (!rec.contains(name)) throw ParseError(src, line, std::string("missing field '") + name + "'");
  try {
    return rec.at(name).get<T>();
  } catch (const json::exception& e) {
    throw ParseError(src, line, std::string("field '") + name + "': " + e.what());
  }
}

}  // namespace

LinkMap parse_linkmap(const std::string& text, const std::string& source_name) {
  LinkMap map;
  std::istringstream in(text);
  std::string raw;
  std::size_t line_no = 0;
  std::vector<std::string> duplicates;

  while (std::getline(in, raw)) {
    ++line_no;
    auto line = text::trim(raw);
    if (line.empty() || line.front() == '#') continue;

    json rec;
    try {
      rec = json::parse(line);
    } catch (const json::parse_error& e) {
      throw ParseError(source_name, line_no, e.what());
    }
    if (!rec.is_object()) throw ParseError(source_name, line_no, "record is not an object");

    if (!rec.contains("id")) {
      if (rec.contains("region_tag")) {
        map.region_tag = require_field<std::string>(rec, "region_tag", source_name, line_no);
        continue;
      }
      throw ParseError(source_name, line_no, "missing field 'id'");
    }

    Link link;
    link.id = require_field<LinkId>(rec, "id", source_name, line_no);
    link.priority = require_field<int>(rec, "priority", source_name, line_no);
    link.light_at_start = require_field<bool>(rec, "light_start", source_name, line_no);
    link.light_at_end = require_field<bool>(rec, "light_end", source_name, line_no);
    link.lanes = require_field<int>(rec, "lanes", source_name, line_no);
    link.speed_limit = kmh_to_mps(require_field<double>(rec, "speed_limit_kmh", source_name, line_no));
    link.length = require_field<double>(rec, "length_m", source_name, line_no);
    link.successors = require_field<std::vector<LinkId>>(rec, "successors", source_name, line_no);
    link.predecessors = require_field<std::vector<LinkId>>(rec, "predecessors", source_name, line_no);

    if (!map.links.emplace(link.id, link).second)
      duplicates.push_back("link " + std::to_string(link.id) + ": duplicate_id (line " +
                           std::to_string(line_no) + ")");
  }

  std::vector<std::string> problems = std::move(duplicates);
  for (const auto& v : validate(map)) problems.push_back(v.to_string());
  if (!problems.empty()) throw ValidationError(std::move(problems));
  return map;
}

LinkMap load_linkmap(const std::filesystem::path& path) {
  return parse_linkmap(text::read_file(path), path.string());
}

std::string serialize_linkmap(const LinkMap& map) {
  std::string out;
  if (!map.region_tag.empty()) out += nlohmann::ordered_json{{"region_tag", map.region_tag}}.dump() + "\n";
  for (const auto& [id, link] : map.links) {
    nlohmann::ordered_json rec;
    rec["id"] = link.id;
    rec["priority"] = link.priority;
    rec["light_start"] = link.light_at_start;
    rec["light_end"] = link.light_at_end;
    rec["lanes"] = link.lanes;
    rec["speed_limit_kmh"] = mps_to_kmh(link.speed_limit);
    rec["length_m"] = link.length;
    rec["successors"] = link.successors;
    rec["predecessors"] = link.predecessors;
    out += rec.dump() + "\n";
  }
  return out;
}

void save_linkmap(const LinkMap& map, const std::filesystem::path& path) {
  text::write_file(path, serialize_linkmap(map));
}

}  // namespace swmlp
