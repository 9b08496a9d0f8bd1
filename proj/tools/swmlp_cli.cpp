// swmlp: simulate → featurize → associate → train → evaluate, one subcommand per stage.

#include <cstdio>
#include <filesystem>
#include <iostream>
#include <optional>
#include <string>

#include "CLI11.hpp"
#include "json.hpp"
#include "swmlp/checkpoint.hpp"
#include "swmlp/errors.hpp"
#include "swmlp/evaluation.hpp"
#include "swmlp/features.hpp"
#include "swmlp/manifest.hpp"
#include "swmlp/map_generator.hpp"
#include "swmlp/pipeline.hpp"
#include "swmlp/text_io.hpp"
#include "swmlp/training.hpp"
#include "swmlp/trips.hpp"

namespace fs = std::filesystem;
using nlohmann::ordered_json;
using namespace swmlp;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitUsage = 2;
constexpr int kExitData = 3;
constexpr int kExitDiverged = 4;

struct Globals {
  std::optional<std::uint64_t> seed;
  int threads = 1;
  bool quiet = false;
};

struct UsageError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

void note(const Globals& g, const std::string& msg) {
  if (!g.quiet) std::cerr << msg << '\n';
}

Scheme scheme_arg(const std::string& s) {
  auto sc = parse_scheme(s);
  if (!sc) throw UsageError("unknown scheme '" + s + "' (expected pa, pf, pup or baseline)");
  return *sc;
}

nlohmann::json read_json_file(const fs::path& p) {
  try {
    return nlohmann::json::parse(text::read_file(p));
  } catch (const nlohmann::json::parse_error& e) {
    throw ParseError(p.string(), 0, e.what());
  }
}

// ---- make-map -------------------------------------------------------------

struct MakeMapArgs {
  GridMapConfig cfg;
  fs::path out;
};

void cmd_make_map(const MakeMapArgs& a, const Globals& g) {
  GridMapConfig cfg = a.cfg;
  if (g.seed) cfg.seed = *g.seed;
  Manifest man("make-map");
  man.set_config({{"rows", cfg.rows},
                  {"cols", cfg.cols},
                  {"seed", cfg.seed},
                  {"region_tag", cfg.region_tag},
                  {"min_block_m", cfg.min_block_m},
                  {"max_block_m", cfg.max_block_m},
                  {"light_probability", cfg.light_probability},
                  {"limit_deviation_probability", cfg.limit_deviation_probability}});
  const LinkMap map = generate_grid_map(cfg);
  save_linkmap(map, a.out);
  man.add_output(a.out);
  man.extra()["links"] = map.links.size();
  man.write(manifest_path_for(a.out));
  note(g, "wrote " + std::to_string(map.links.size()) + " links to " + a.out.string());
}

// ---- simulate -------------------------------------------------------------

struct SimulateArgs {
  fs::path map;
  fs::path out;
  SimConfig cfg;
};

void cmd_simulate(const SimulateArgs& a, const Globals& g) {
  SimConfig cfg = a.cfg;
  if (g.seed) cfg.seed = *g.seed;
  cfg.threads = g.threads;
  if (auto p = cfg.problems(); !p.empty()) throw ValidationError(std::move(p));
  Manifest man("simulate");
  man.set_config({{"n_trips", cfg.n_trips},
                  {"mean_trip_len", cfg.mean_trip_len},
                  {"seed", cfg.seed},
                  {"noise_sigma", cfg.noise_sigma},
                  {"step_m", cfg.step_m},
                  {"stop_probability", cfg.stop_probability},
                  {"accel_mps2", cfg.accel_mps2},
                  {"brake_mps2", cfg.brake_mps2},
                  {"first_trip_id", cfg.first_trip_id}});
  const LinkMap map = load_linkmap(a.map);
  man.add_input(a.map);
  const auto trips = simulate_trips(map, cfg);
  save_trips(trips, a.out);
  man.add_output(a.out);
  man.write(manifest_path_for(a.out));
  note(g, "simulated " + std::to_string(trips.size()) + " trips into " + a.out.string());
}

// ---- featurize ------------------------------------------------------------

struct FeaturizeArgs {
  fs::path map;
  fs::path trips;
  fs::path out;
  bool fit_stats = false;
  fs::path stats_in;
  fs::path stats_out;
};

void cmd_featurize(const FeaturizeArgs& a, const Globals& g) {
  if (a.fit_stats == !a.stats_in.empty())
    throw UsageError("featurize needs exactly one of --fit-stats or --stats");
  Manifest man("featurize");
  ordered_json cfg{{"fit_stats", a.fit_stats}};
  const LinkMap map = load_linkmap(a.map);
  TripLoadStats load_stats;
  const auto trips = load_trips(a.trips, map, &load_stats);
  man.add_input(a.map);
  man.add_input(a.trips);
  const auto raw = featurize_trips(map, trips);

  NormStats stats;
  if (a.fit_stats) {
    stats = fit_norm(collect_vectors(raw));
  } else {
    stats = parse_norm_stats(text::read_file(a.stats_in), a.stats_in.string());
    man.add_input(a.stats_in);
    cfg["stats"] = a.stats_in.string();
  }
  man.set_config(cfg);
  save_feature_dataset({stats, normalize(raw, stats)}, a.out);
  man.add_output(a.out);
  if (!a.stats_out.empty()) {
    text::write_file(a.stats_out, serialize_norm_stats(stats) + "\n");
    man.add_output(a.stats_out);
  }
  man.extra()["trips"] = trips.size();
  man.extra()["discarded_short_trips"] = load_stats.discarded_short;
  ordered_json constant = ordered_json::array();
  for (std::size_t k = 0; k < kFeatureCount; ++k)
    if (stats.constant[k]) constant.push_back(kFeatureNames[k]);
  man.extra()["constant_features"] = constant;
  man.write(manifest_path_for(a.out));
  note(g, "featurized " + std::to_string(trips.size()) + " trips (" + std::to_string(load_stats.discarded_short) +
              " short trips dropped)");
}

// ---- associate ------------------------------------------------------------

struct AssociateArgs {
  fs::path features;
  fs::path out;
  std::string scheme = "pf";
  int pup_near = 5;
  int pup_far = 10;
};

void cmd_associate(const AssociateArgs& a, const Globals& g) {
  const SchemeConfig scfg{scheme_arg(a.scheme), a.pup_near, a.pup_far};
  Manifest man("associate");
  man.set_config({{"scheme", scheme_name(scfg.scheme)}, {"pup_offsets", {a.pup_near, a.pup_far}}});
  const auto ds = load_feature_dataset(a.features);
  man.add_input(a.features);
  std::size_t skipped = 0;
  const auto samples = build_dataset(ds.trips, scfg, ds.stats.pat_sentinel(), &skipped);
  save_samples(samples, a.out);
  man.add_output(a.out);
  man.extra()["samples"] = samples.size();
  man.extra()["skipped_trips"] = skipped;
  man.write(manifest_path_for(a.out));
  note(g, std::to_string(samples.size()) + " samples, " + std::to_string(skipped) + " trips too short");
}

// ---- train ----------------------------------------------------------------

struct TrainArgs {
  std::string scheme = "pf";
  fs::path train;
  fs::path val;
  fs::path config;
  fs::path out;
  std::optional<int> epochs;
  std::optional<int> batch_size;
  std::optional<double> lr;
  std::optional<std::string> optimizer;
  std::optional<int> patience;
  std::optional<std::uint64_t> init_seed;
  int pup_near = 5;
  int pup_far = 10;
};

void cmd_train(const TrainArgs& a, const Globals& g) {
  const Scheme scheme = scheme_arg(a.scheme);
  TrainConfig cfg;
  if (!a.config.empty()) cfg = parse_train_config(text::read_file(a.config), a.config.string());
  if (g.seed) cfg.seed = *g.seed;
  if (a.epochs) cfg.epochs = *a.epochs;
  if (a.batch_size) cfg.batch_size = *a.batch_size;
  if (a.lr) cfg.optimizer.learning_rate = *a.lr;
  if (a.patience) cfg.patience = *a.patience;
  if (a.optimizer) {
    if (*a.optimizer == "adam") cfg.optimizer.kind = OptimizerKind::Adam;
    else if (*a.optimizer == "sgd") cfg.optimizer.kind = OptimizerKind::Sgd;
    else throw UsageError("unknown optimizer '" + *a.optimizer + "'");
  }
  if (auto p = cfg.problems(); !p.empty()) throw ValidationError(std::move(p));
  const std::uint64_t init_seed = a.init_seed.value_or(derive_seed(cfg.seed, 100));

  Manifest man("train");
  ordered_json mcfg = ordered_json::parse(serialize_train_config(cfg));
  mcfg["scheme"] = scheme_name(scheme);
  mcfg["init_seed"] = init_seed;
  if (!a.config.empty()) man.add_input(a.config);
  man.set_config(mcfg);

  const auto tr = load_samples(a.train);
  const auto va = load_samples(a.val);
  man.add_input(a.train);
  man.add_input(a.val);
  for (const auto* set : {&tr, &va})
    for (const auto& s : *set)
      if (s.provenance.scheme != scheme)
        throw ValidationError({"sample of trip " + std::to_string(s.provenance.trip_id) + " was built with scheme '" +
                               std::string(scheme_name(s.provenance.scheme)) + "', expected '" +
                               std::string(scheme_name(scheme)) + "'"});

  const auto arch = scheme == Scheme::Pointwise ? nn::Architecture::Baseline : nn::Architecture::Swmlp;
  const TrainResult result = train(nn::init_model(init_seed, arch), tr, va, cfg);
  save_checkpoint({result.model, {scheme, a.pup_near, a.pup_far}}, a.out);
  man.add_output(a.out);
  man.extra()["history"] = ordered_json::parse(serialize_history(result.history));
  man.write(manifest_path_for(a.out));
  note(g, "best epoch " + std::to_string(result.history.best_epoch) +
              ", validation RMSE " + text::format_double(result.history.best_val_rmse()));
}

// ---- evaluate -------------------------------------------------------------

struct EvaluateArgs {
  fs::path model;
  fs::path test;
  std::string scheme;
  fs::path report;
  fs::path traces_dir;
  int max_traces = 10;
};

void cmd_evaluate(const EvaluateArgs& a, const Globals& g) {
  Checkpoint ck = load_checkpoint(a.model);
  if (!a.scheme.empty() && scheme_arg(a.scheme) != ck.scheme.scheme)
    throw ValidationError({"--scheme " + a.scheme + " does not match the checkpoint's scheme '" +
                           std::string(scheme_name(ck.scheme.scheme)) + "'"});
  Manifest man("evaluate");
  man.set_config({{"scheme", scheme_name(ck.scheme.scheme)}, {"max_traces", a.max_traces}});
  const auto ds = load_feature_dataset(a.test);
  man.add_input(a.model);
  man.add_input(a.test);
  const Evaluation ev = evaluate(ck.model, ds.trips, ck.scheme, ds.stats.pat_sentinel(), g.threads);
  text::write_file(a.report, serialize_report(ev.report));
  man.add_output(a.report);
  if (!a.traces_dir.empty()) {
    const std::vector<std::string> names{model_label(ck.scheme.scheme)};
    int written = 0;
    for (const auto& p : ev.predictions) {
      if (written >= a.max_traces) break;
      const Trace t = make_trace(std::span(&p, 1), names);
      const auto base = a.traces_dir / ("trip_" + std::to_string(p.trip_id));
      for (auto [fmt, ext] : {std::pair{TraceFormat::Csv, ".csv"}, std::pair{TraceFormat::Svg, ".svg"}}) {
        const fs::path out = base.string() + ext;
        emit_trace(t, out, fmt);
        man.add_output(out);
      }
      ++written;
    }
  }
  man.extra()["skipped_trips"] = ev.skipped_trips;
  man.write(manifest_path_for(a.report));
  char line[160];
  std::snprintf(line, sizeof line, "%s: rmse %.4f  mse %.4f  mae %.4f over %zu trips", ev.report.scheme.c_str(),
                ev.report.rmse, ev.report.mse, ev.report.mae, ev.report.n_trips);
  note(g, line);
}

// ---- pipeline -------------------------------------------------------------

struct PipelineArgs {
  fs::path out;
  fs::path config;
  bool resume = false;
};

void cmd_pipeline(const PipelineArgs& a, const Globals& g) {
  PipelineConfig cfg = default_pipeline_config();
  if (!a.config.empty()) cfg = pipeline_config_from_json(read_json_file(a.config), cfg);
  if (g.seed) cfg.seed = *g.seed;
  cfg.threads = g.threads;

  Manifest man("pipeline");
  man.set_config(pipeline_config_to_json(cfg));
  if (!a.config.empty()) man.add_input(a.config);
  for (const auto& r : cfg.regions)
    if (r.map_file) man.add_input(*r.map_file);

  const fs::path manifest_path = a.out / "manifest.json";
  const Logger log = [&](const std::string& m) { note(g, m); };
  PipelineResult res;
  try {
    res = run_pipeline(cfg, a.out, a.resume, log);
  } catch (...) {
    man.extra()["status"] = "failed";
    man.extra()["note"] = "outputs under this directory are partial";
    man.write(manifest_path);
    throw;
  }
  std::vector<fs::path> outputs;
  for (const auto& e : fs::recursive_directory_iterator(a.out))
    if (e.is_regular_file() && e.path() != manifest_path && e.path().parent_path().filename() != "stamps")
      outputs.push_back(e.path());
  std::sort(outputs.begin(), outputs.end());
  for (const auto& p : outputs) man.add_output(p);
  man.extra()["status"] = "complete";
  man.extra()["ran_stages"] = res.ran_stages;
  man.extra()["reused_stages"] = res.reused_stages;
  man.write(manifest_path);
  if (!g.quiet) std::cout << res.metrics_table;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Per-point vehicle speed prediction from road features"};
  app.set_version_flag("--version", std::string(SWMLP_VERSION));
  app.require_subcommand(1);

  Globals g;
  std::uint64_t seed = 0;
  auto* seed_opt = app.add_option("--seed", seed, "Base seed (overrides config files)");
  app.add_option("--threads", g.threads, "Worker threads")->check(CLI::PositiveNumber);
  app.add_flag("--quiet", g.quiet, "Suppress progress output");
  app.fallthrough();

  MakeMapArgs mm;
  auto* c_map = app.add_subcommand("make-map", "Generate a synthetic grid-city link map");
  c_map->add_option("--out", mm.out, "Output link map (JSONL)")->required();
  c_map->add_option("--rows", mm.cfg.rows);
  c_map->add_option("--cols", mm.cfg.cols);
  c_map->add_option("--region", mm.cfg.region_tag, "Region tag stored in the map");
  c_map->add_option("--light-prob", mm.cfg.light_probability);

  SimulateArgs sa;
  auto* c_sim = app.add_subcommand("simulate", "Simulate trips over a link map");
  c_sim->add_option("--map", sa.map, "Link map (JSONL)")->required();
  c_sim->add_option("--out", sa.out, "Trip CSV to write")->required();
  c_sim->add_option("--n-trips", sa.cfg.n_trips);
  c_sim->add_option("--mean-len", sa.cfg.mean_trip_len, "Mean points per trip");
  c_sim->add_option("--noise", sa.cfg.noise_sigma, "Speed noise sigma, m/s");
  c_sim->add_option("--step", sa.cfg.step_m, "Distance between registrations, m");
  c_sim->add_option("--stop-prob", sa.cfg.stop_probability, "Probability of stopping at a light");
  c_sim->add_option("--first-trip-id", sa.cfg.first_trip_id);

  FeaturizeArgs fa;
  auto* c_feat = app.add_subcommand("featurize", "Extract and normalize per-point features");
  c_feat->add_option("--map", fa.map)->required();
  c_feat->add_option("--trips", fa.trips)->required();
  c_feat->add_option("--out", fa.out)->required();
  c_feat->add_flag("--fit-stats", fa.fit_stats, "Fit normalization statistics on this split");
  c_feat->add_option("--stats", fa.stats_in, "Reuse statistics fitted on the training split");
  c_feat->add_option("--stats-out", fa.stats_out, "Write the statistics used");

  AssociateArgs aa;
  auto* c_assoc = app.add_subcommand("associate", "Build (context, context, target) samples");
  c_assoc->add_option("--features", aa.features)->required();
  c_assoc->add_option("--out", aa.out)->required();
  c_assoc->add_option("--scheme", aa.scheme, "pa, pf, pup or baseline")->required();
  c_assoc->add_option("--pup-near", aa.pup_near);
  c_assoc->add_option("--pup-far", aa.pup_far);

  TrainArgs ta;
  auto* c_train = app.add_subcommand("train", "Train a model on associated samples");
  c_train->add_option("--scheme", ta.scheme, "pa, pf, pup or baseline")->required();
  c_train->add_option("--train", ta.train)->required();
  c_train->add_option("--val", ta.val)->required();
  c_train->add_option("--out", ta.out, "Checkpoint to write")->required();
  c_train->add_option("--config", ta.config, "Training config (JSON)");
  c_train->add_option("--epochs", ta.epochs);
  c_train->add_option("--batch-size", ta.batch_size);
  c_train->add_option("--lr", ta.lr);
  c_train->add_option("--optimizer", ta.optimizer, "adam or sgd");
  c_train->add_option("--patience", ta.patience);
  c_train->add_option("--init-seed", ta.init_seed);
  c_train->add_option("--pup-near", ta.pup_near);
  c_train->add_option("--pup-far", ta.pup_far);

  EvaluateArgs ea;
  auto* c_eval = app.add_subcommand("evaluate", "Score a checkpoint on a test split");
  c_eval->add_option("--model", ea.model)->required();
  c_eval->add_option("--test", ea.test, "Featurized test split")->required();
  c_eval->add_option("--report", ea.report, "Metrics report (JSON)")->required();
  c_eval->add_option("--scheme", ea.scheme, "Must match the checkpoint when given");
  c_eval->add_option("--traces-dir", ea.traces_dir, "Write per-trip CSV and SVG traces here");
  c_eval->add_option("--max-traces", ea.max_traces);

  PipelineArgs pa;
  auto* c_pipe = app.add_subcommand("pipeline", "Run every stage and print the comparison table");
  c_pipe->add_option("--out", pa.out, "Output directory")->required();
  c_pipe->add_option("--config", pa.config, "Pipeline config (JSON)");
  c_pipe->add_flag("--resume", pa.resume, "Reuse stage outputs whose inputs are unchanged");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? kExitOk : kExitUsage;
  }
  if (*seed_opt) g.seed = seed;

  try {
    if (*c_map) cmd_make_map(mm, g);
    else if (*c_sim) cmd_simulate(sa, g);
    else if (*c_feat) cmd_featurize(fa, g);
    else if (*c_assoc) cmd_associate(aa, g);
    else if (*c_train) cmd_train(ta, g);
    else if (*c_eval) cmd_evaluate(ea, g);
    else if (*c_pipe) cmd_pipeline(pa, g);
  } catch (const UsageError& e) {
    std::cerr << "error: " << e.what() << "\n" << app.help();
    return kExitUsage;
  } catch (const ValidationError& e) {
    std::cerr << "validation failed:\n";
    for (const auto& p : e.problems()) std::cerr << "  " << p << '\n';
    return kExitData;
  } catch (const ParseError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitData;
  } catch (const DivergenceError& e) {
    std::cerr << "training diverged: " << e.what() << '\n';
    return kExitDiverged;
  } catch (const DomainError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitData;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return kExitOk;
}
