#pragma once

#include <filesystem>
#include <random>
#include <string>
#include <vector>

#include "swmlp/association.hpp"
#include "swmlp/linkmap.hpp"

namespace swmlp::testing {

/// Fresh directory under the system temp dir, removed on destruction.
class TempDir {
public:
  explicit TempDir(const std::string& tag) {
    std::random_device rd;
    path_ = std::filesystem::temp_directory_path() / ("swmlp_" + tag + "_" + std::to_string(rd()));
    std::filesystem::create_directories(path_);
  }
  ~TempDir() {
    std::error_code ec;
    std::filesystem::remove_all(path_, ec);
  }
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;

  const std::filesystem::path& path() const { return path_; }
  std::filesystem::path operator/(const std::string& rel) const { return path_ / rel; }

private:
  std::filesystem::path path_;
};

inline Link make_link(LinkId id, double length, double limit_mps = 13.9) {
  Link l;
  l.id = id;
  l.priority = 2;
  l.lanes = 1;
  l.speed_limit = limit_mps;
  l.length = length;
  return l;
}

/// 1 → 2 → ... → n, predecessors filled in.
inline LinkMap chain_map(int n, double length = 100.0) {
  LinkMap m;
  for (int i = 1; i <= n; ++i) {
    Link l = make_link(i, length);
    if (i < n) l.successors.push_back(i + 1);
    m.links.emplace(i, l);
  }
  derive_predecessors(m);
  return m;
}

inline FeatureVector random_vector(std::mt19937_64& rng) {
  std::normal_distribution<double> n(0.0, 1.0);
  FeatureVector v;
  for (auto& x : v) x = n(rng);
  return v;
}

/// Random normalized-looking triplet with the target PAT masked.
inline AssociatedSample random_sample(std::mt19937_64& rng, double sentinel = -0.7) {
  AssociatedSample s;
  s.context_a = random_vector(rng);
  s.context_b = random_vector(rng);
  s.target = mask_target_pat(random_vector(rng), sentinel);
  s.label = std::uniform_real_distribution<double>(0.0, 20.0)(rng);
  return s;
}

}  // namespace swmlp::testing
