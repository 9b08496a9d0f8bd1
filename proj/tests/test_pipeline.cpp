#include <gtest/gtest.h>

#include <map>

#include "swmlp/errors.hpp"
#include "swmlp/manifest.hpp"
#include "swmlp/pipeline.hpp"
#include "swmlp/text_io.hpp"
#include "test_util.hpp"

using namespace swmlp;
namespace fs = std::filesystem;

namespace {

PipelineConfig small_config() {
  PipelineConfig cfg = default_pipeline_config();
  for (auto& r : cfg.regions) {
    r.map.rows = 4;
    r.map.cols = 4;
    r.n_trips = 40;
  }
  cfg.sim.mean_trip_len = 30;
  cfg.train.epochs = 3;
  cfg.train.batch_size = 64;
  cfg.traces = 2;
  return cfg;
}

std::map<std::string, std::string> digests(const fs::path& root) {
  std::map<std::string, std::string> out;
  for (const auto& e : fs::recursive_directory_iterator(root))
    if (e.is_regular_file()) out[fs::relative(e.path(), root).generic_string()] = sha256_file(e.path());
  return out;
}

}  // namespace

TEST(PipelineConfigJson, RoundTrip) {
  const PipelineConfig cfg = small_config();
  const auto j = pipeline_config_to_json(cfg);
  const PipelineConfig back = pipeline_config_from_json(nlohmann::json::parse(j.dump()), default_pipeline_config());
  EXPECT_EQ(pipeline_config_to_json(back), j);
}

TEST(PipelineConfigJson, PartialOverridesAndErrors) {
  const auto j = nlohmann::json::parse(R"({"seed": 5, "training": {"epochs": 2}, "schemes": ["pf", "baseline"]})");
  const PipelineConfig c = pipeline_config_from_json(j, default_pipeline_config());
  EXPECT_EQ(c.seed, 5u);
  EXPECT_EQ(c.train.epochs, 2);
  EXPECT_EQ(c.train.batch_size, 256);
  ASSERT_EQ(c.schemes.size(), 2u);
  EXPECT_EQ(c.schemes[1], Scheme::Pointwise);
  EXPECT_THROW(pipeline_config_from_json(nlohmann::json::parse(R"({"schemes": ["p&f"]})"), c), ValidationError);
  EXPECT_THROW(pipeline_config_from_json(nlohmann::json::parse(R"({"regions": []})"), c), ValidationError);
  EXPECT_THROW(pipeline_config_from_json(nlohmann::json::parse(R"({"seed": "x"})"), c), ValidationError);
}

TEST(MetricsTable, Layout) {
  SchemeOutcome o{Scheme::PastFuture, {}, {}};
  o.report.rmse = 2.5;
  o.report.mse = 6.25;
  o.report.mae = 1.0 / 3.0;
  o.report.n_trips = 3;
  o.report.n_points = 90;
  o.history.epochs = {{0, 1.0, 2.5}};
  const std::string t = format_metrics_table({o});
  EXPECT_NE(t.find("SWMLP (P&F)"), std::string::npos);
  EXPECT_NE(t.find("2.5000"), std::string::npos);
  EXPECT_NE(t.find("0.3333"), std::string::npos);
  EXPECT_EQ(model_label(Scheme::Pointwise), "MLP (pointwise)");
}

TEST(Pipeline, RerunIsByteIdentical) {
  swmlp::testing::TempDir a("pipe_a"), b("pipe_b");
  const PipelineConfig cfg = small_config();
  const PipelineResult ra = run_pipeline(cfg, a.path(), false);
  const PipelineResult rb = run_pipeline(cfg, b.path(), false);
  ASSERT_EQ(ra.outcomes.size(), 4u);
  EXPECT_EQ(ra.metrics_table, rb.metrics_table);
  EXPECT_EQ(digests(a.path()), digests(b.path()));
  EXPECT_EQ(text::read_file(a / "metrics_table.txt"), ra.metrics_table);
  EXPECT_TRUE(fs::exists(a / "features/stats.json"));
  EXPECT_TRUE(fs::exists(a / "models/pf.json"));
  EXPECT_TRUE(fs::exists(a / "reports/pup.json"));
  std::size_t svgs = 0;
  for (const auto& e : fs::directory_iterator(a / "traces")) svgs += e.path().extension() == ".svg";
  EXPECT_EQ(svgs, 2u);
}

TEST(Pipeline, ResumeReusesAndRepairs) {
  swmlp::testing::TempDir dir("pipe_resume");
  PipelineConfig cfg = small_config();
  cfg.schemes = {Scheme::Pointwise, Scheme::PastFuture};
  const PipelineResult first = run_pipeline(cfg, dir.path(), false);
  const auto before = digests(dir.path());

  const PipelineResult again = run_pipeline(cfg, dir.path(), true);
  EXPECT_TRUE(again.ran_stages.empty());
  EXPECT_EQ(again.metrics_table, first.metrics_table);

  // Simulated interruption: the P&F model never got written.
  fs::remove(dir / "models/pf.json");
  const PipelineResult repaired = run_pipeline(cfg, dir.path(), true);
  EXPECT_EQ(repaired.ran_stages, (std::vector<std::string>{"train_pf"}));
  EXPECT_EQ(repaired.metrics_table, first.metrics_table);
  EXPECT_EQ(digests(dir.path()), before);

  // A changed training config invalidates training and everything after it.
  cfg.train.epochs = 2;
  const PipelineResult changed = run_pipeline(cfg, dir.path(), true);
  EXPECT_EQ(changed.ran_stages,
            (std::vector<std::string>{"train_baseline", "evaluate_baseline", "train_pf", "evaluate_pf"}));
}

TEST(Pipeline, BadConfigFailsFast) {
  swmlp::testing::TempDir dir("pipe_bad");
  PipelineConfig cfg = small_config();
  cfg.train.epochs = 0;
  EXPECT_THROW(run_pipeline(cfg, dir.path(), false), ValidationError);
  cfg = small_config();
  cfg.sim.n_trips = 1;
  cfg.regions[1].n_trips = 0;
  EXPECT_THROW(run_pipeline(cfg, dir.path(), false), ValidationError);
}
