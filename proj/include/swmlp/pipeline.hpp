#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "json.hpp"
#include "swmlp/association.hpp"
#include "swmlp/evaluation.hpp"
#include "swmlp/map_generator.hpp"
#include "swmlp/training.hpp"
#include "swmlp/trips.hpp"

namespace swmlp {

/// One city: its link map (generated, or read from `map_file`) and how many trips to simulate there.
struct RegionSpec {
  std::string name;
  GridMapConfig map;
  std::optional<std::filesystem::path> map_file;
  int n_trips = 100;
};

/// Full desk-scale experiment: three region-disjoint splits, one model per scheme.
struct PipelineConfig {
  std::uint64_t seed = 2024;
  std::array<RegionSpec, 3> regions;  // train, val, test
  SimConfig sim;                      // n_trips, seed and first_trip_id are set per region
  TrainConfig train;
  std::vector<Scheme> schemes{Scheme::Pointwise, Scheme::Past, Scheme::PastFuture, Scheme::PunctualPast};
  int pup_near = 5;
  int pup_far = 10;
  int traces = 6;  // test trips plotted
  int threads = 1;
};

PipelineConfig default_pipeline_config();
nlohmann::ordered_json pipeline_config_to_json(const PipelineConfig& cfg);
/// Keys absent from `j` keep the values of `base`.
PipelineConfig pipeline_config_from_json(const nlohmann::json& j, PipelineConfig base);

struct SchemeOutcome {
  Scheme scheme;
  MetricsReport report;
  TrainHistory history;
};

struct PipelineResult {
  std::vector<SchemeOutcome> outcomes;
  std::string metrics_table;
  std::vector<std::string> reused_stages;
  std::vector<std::string> ran_stages;
};

/// Model label used in tables and plots, e.g. "SWMLP (P&F)".
std::string model_label(Scheme s);
std::string format_metrics_table(const std::vector<SchemeOutcome>& outcomes);

using Logger = std::function<void(const std::string&)>;

/// Runs map → simulate → featurize → associate → train → evaluate under `out_dir`.
/// Every stage reads its inputs back from the files the previous stage wrote.
/// With `resume`, a stage whose outputs and stamp match the current inputs is skipped.
PipelineResult run_pipeline(const PipelineConfig& cfg, const std::filesystem::path& out_dir,
                            bool resume, const Logger& log = {});

}  // namespace swmlp
