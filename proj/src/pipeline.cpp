#include "swmlp/pipeline.hpp"

#include <cstdio>

#include "swmlp/checkpoint.hpp"
#include "swmlp/errors.hpp"
#include "swmlp/features.hpp"
#include "swmlp/manifest.hpp"
#include "swmlp/text_io.hpp"

namespace swmlp {

namespace fs = std::filesystem;
using nlohmann::ordered_json;

PipelineConfig default_pipeline_config() {
  PipelineConfig cfg;
  const std::array<const char*, 3> names{"train", "val", "test"};
  const std::array<int, 3> trips{1400, 420, 300};
  for (std::size_t i = 0; i < 3; ++i) {
    cfg.regions[i].name = names[i];
    cfg.regions[i].map.rows = 8;
    cfg.regions[i].map.cols = 8;
    cfg.regions[i].map.region_tag = names[i];
    cfg.regions[i].n_trips = trips[i];
  }
  cfg.sim.mean_trip_len = 60;
  cfg.sim.noise_sigma = 0.5;
  return cfg;
}

ordered_json pipeline_config_to_json(const PipelineConfig& cfg) {
  ordered_json j;
  j["seed"] = cfg.seed;
  auto& regions = j["regions"] = ordered_json::array();
  for (const auto& r : cfg.regions) {
    ordered_json e;
    e["name"] = r.name;
    if (r.map_file) {
      e["map_file"] = r.map_file->string();
    } else {
      e["rows"] = r.map.rows;
      e["cols"] = r.map.cols;
      e["min_block_m"] = r.map.min_block_m;
      e["max_block_m"] = r.map.max_block_m;
      e["light_probability"] = r.map.light_probability;
      e["limit_deviation_probability"] = r.map.limit_deviation_probability;
    }
    e["n_trips"] = r.n_trips;
    regions.push_back(std::move(e));
  }
  auto& sim = j["simulation"];
  sim["mean_trip_len"] = cfg.sim.mean_trip_len;
  sim["noise_sigma"] = cfg.sim.noise_sigma;
  sim["step_m"] = cfg.sim.step_m;
  sim["stop_probability"] = cfg.sim.stop_probability;
  sim["accel_mps2"] = cfg.sim.accel_mps2;
  sim["brake_mps2"] = cfg.sim.brake_mps2;
  j["training"] = ordered_json::parse(serialize_train_config(cfg.train));
  auto& schemes = j["schemes"] = ordered_json::array();
  for (auto s : cfg.schemes) schemes.push_back(scheme_name(s));
  j["pup_offsets"] = {cfg.pup_near, cfg.pup_far};
  j["traces"] = cfg.traces;
  j["threads"] = cfg.threads;
  return j;
}

PipelineConfig pipeline_config_from_json(const nlohmann::json& j, PipelineConfig cfg) {
  const auto get = [&](const nlohmann::json& obj, const char* key, auto& dst) {
    if (obj.contains(key)) dst = obj.at(key).get<std::decay_t<decltype(dst)>>();
  };
  try {
    get(j, "seed", cfg.seed);
    if (j.contains("regions")) {
      const auto& rs = j.at("regions");
      if (!rs.is_array() || rs.size() != 3)
        throw ValidationError({"config: 'regions' must list train, val and test"});
      for (std::size_t i = 0; i < 3; ++i) {
        auto& r = cfg.regions[i];
        get(rs[i], "name", r.name);
        if (rs[i].contains("map_file")) r.map_file = fs::path(rs[i].at("map_file").get<std::string>());
        get(rs[i], "rows", r.map.rows);
        get(rs[i], "cols", r.map.cols);
        get(rs[i], "min_block_m", r.map.min_block_m);
        get(rs[i], "max_block_m", r.map.max_block_m);
        get(rs[i], "light_probability", r.map.light_probability);
        get(rs[i], "limit_deviation_probability", r.map.limit_deviation_probability);
        get(rs[i], "n_trips", r.n_trips);
        r.map.region_tag = r.name;
      }
    }
    if (j.contains("simulation")) {
      const auto& s = j.at("simulation");
      get(s, "mean_trip_len", cfg.sim.mean_trip_len);
      get(s, "noise_sigma", cfg.sim.noise_sigma);
      get(s, "step_m", cfg.sim.step_m);
      get(s, "stop_probability", cfg.sim.stop_probability);
      get(s, "accel_mps2", cfg.sim.accel_mps2);
      get(s, "brake_mps2", cfg.sim.brake_mps2);
    }
    if (j.contains("training")) {
      // Merge over the current training config so partial overrides work.
      auto merged = nlohmann::json::parse(serialize_train_config(cfg.train));
      merged.update(j.at("training"));
      cfg.train = parse_train_config(merged.dump(), "config.training");
    }
    if (j.contains("schemes")) {
      cfg.schemes.clear();
      for (const auto& s : j.at("schemes")) {
        auto sc = parse_scheme(s.get<std::string>());
        if (!sc) throw ValidationError({"config: unknown scheme " + s.dump()});
        cfg.schemes.push_back(*sc);
      }
    }
    if (j.contains("pup_offsets")) {
      const auto o = j.at("pup_offsets").get<std::vector<int>>();
      if (o.size() != 2) throw ValidationError({"config: pup_offsets needs two entries"});
      cfg.pup_near = o[0];
      cfg.pup_far = o[1];
    }
    get(j, "traces", cfg.traces);
    get(j, "threads", cfg.threads);
  } catch (const nlohmann::json::exception& e) {
    throw ValidationError({std::string("config: ") + e.what()});
  }
  return cfg;
}

std::string model_label(Scheme s) {
  switch (s) {
    case Scheme::Pointwise: return "MLP (pointwise)";
    case Scheme::Past: return "SWMLP (Pa)";
    case Scheme::PastFuture: return "SWMLP (P&F)";
    case Scheme::PunctualPast: return "SWMLP (PuP)";
  }
  return "?";
}

std::string format_metrics_table(const std::vector<SchemeOutcome>& outcomes) {
  std::string out;
  char line[256];
  std::snprintf(line, sizeof line, "%-18s %9s %9s %9s %7s %8s %10s\n", "model", "RMSE", "MSE", "MAE",
                "trips", "points", "best_epoch");
  out += line;
  for (const auto& o : outcomes) {
    std::snprintf(line, sizeof line, "%-18s %9.4f %9.4f %9.4f %7zu %8zu %10zu\n", model_label(o.scheme).c_str(),
                  o.report.rmse, o.report.mse, o.report.mae, o.report.n_trips, o.report.n_points,
                  o.history.best_epoch);
    out += line;
  }
  return out;
}

namespace {

class Stages {
public:
  Stages(fs::path root, bool resume, const Logger& log, PipelineResult& res)
      : root_(std::move(root)), resume_(resume), log_(log), res_(res) {}

  fs::path path(const std::string& rel) const { return root_ / rel; }

  void run(const std::string& name, const ordered_json& config, const std::vector<fs::path>& inputs,
           const std::vector<fs::path>& outputs, const std::function<void()>& produce) {
    const fs::path stamp_path = root_ / "stamps" / (name + ".json");
    ordered_json stamp;
    stamp["config"] = config;
    auto& in = stamp["inputs"] = ordered_json::object();
    for (const auto& p : inputs) in[fs::relative(p, root_).generic_string()] = sha256_file(p);

    if (resume_ && fs::exists(stamp_path) && outputs_present(outputs)) {
      try {
        const auto old = ordered_json::parse(text::read_file(stamp_path));
        if (old.at("config") == stamp["config"] && old.at("inputs") == stamp["inputs"] &&
            old.at("outputs") == digests(outputs)) {
          res_.reused_stages.push_back(name);
          say("reuse " + name);
          return;
        }
      } catch (const std::exception&) {
        // unreadable stamp: rerun the stage
      }
    }
    say("run   " + name);
    produce();
    stamp["outputs"] = digests(outputs);
    text::write_file(stamp_path, stamp.dump(2) + "\n");
    res_.ran_stages.push_back(name);
  }

private:
  static bool outputs_present(const std::vector<fs::path>& outputs) {
    for (const auto& p : outputs)
      if (!fs::exists(p)) return false;
    return true;
  }
  ordered_json digests(const std::vector<fs::path>& outputs) const {
    ordered_json out = ordered_json::object();
    for (const auto& p : outputs) out[fs::relative(p, root_).generic_string()] = sha256_file(p);
    return out;
  }
  void say(const std::string& msg) const {
    if (log_) log_(msg);
  }

  fs::path root_;
  bool resume_;
  const Logger& log_;
  PipelineResult& res_;
};

int scheme_slot(Scheme s) { return static_cast<int>(s); }

}  // namespace

PipelineResult run_pipeline(const PipelineConfig& cfg, const fs::path& out_dir, bool resume,
                            const Logger& log) {
  if (auto p = cfg.train.problems(); !p.empty()) throw ValidationError(std::move(p));
  if (cfg.schemes.empty()) throw ValidationError({"pipeline: no schemes selected"});
  fs::create_directories(out_dir);
  PipelineResult res;
  Stages st(out_dir, resume, log, res);

  // Maps and trips per region.
  std::array<fs::path, 3> map_paths, trip_paths;
  for (std::size_t i = 0; i < 3; ++i) {
    const RegionSpec& region = cfg.regions[i];
    map_paths[i] = st.path("maps/" + region.name + ".jsonl");
    trip_paths[i] = st.path("trips/" + region.name + ".csv");

    GridMapConfig map_cfg = region.map;
    map_cfg.seed = derive_seed(cfg.seed, 1 + i);
    map_cfg.region_tag = region.name;
    ordered_json mcfg = pipeline_config_to_json(cfg)["regions"][i];
    mcfg["seed"] = map_cfg.seed;
    std::vector<fs::path> map_inputs;
    if (region.map_file) map_inputs.push_back(*region.map_file);
    st.run("map_" + region.name, mcfg, map_inputs, {map_paths[i]}, [&] {
      LinkMap m = region.map_file ? load_linkmap(*region.map_file) : generate_grid_map(map_cfg);
      if (m.region_tag.empty()) m.region_tag = region.name;
      save_linkmap(m, map_paths[i]);
    });

    SimConfig sim = cfg.sim;
    sim.n_trips = region.n_trips;
    sim.seed = derive_seed(cfg.seed, 10 + i);
    sim.first_trip_id = static_cast<std::int64_t>(i) * 1'000'000;
    sim.threads = cfg.threads;
    ordered_json scfg = pipeline_config_to_json(cfg)["simulation"];
    scfg["n_trips"] = sim.n_trips;
    scfg["seed"] = sim.seed;
    scfg["first_trip_id"] = sim.first_trip_id;
    st.run("trips_" + region.name, scfg, {map_paths[i]}, {trip_paths[i]}, [&] {
      save_trips(simulate_trips(load_linkmap(map_paths[i]), sim), trip_paths[i]);
    });
  }

  // Features, normalized with statistics of the training region only.
  std::array<fs::path, 3> feature_paths;
  for (std::size_t i = 0; i < 3; ++i) feature_paths[i] = st.path("features/" + cfg.regions[i].name + ".csv");
  const fs::path stats_path = st.path("features/stats.json");
  {
    std::vector<fs::path> inputs(map_paths.begin(), map_paths.end());
    inputs.insert(inputs.end(), trip_paths.begin(), trip_paths.end());
    std::vector<fs::path> outputs(feature_paths.begin(), feature_paths.end());
    outputs.push_back(stats_path);
    st.run("featurize", ordered_json::object(), inputs, outputs, [&] {
      std::array<LinkMap, 3> maps;
      std::array<std::vector<Trip>, 3> trips;
      for (std::size_t i = 0; i < 3; ++i) {
        maps[i] = load_linkmap(map_paths[i]);
        trips[i] = load_trips(trip_paths[i], maps[i]);
      }
      DatasetSplit split = split_by_region(trips[0], trips[1], trips[2]);
      const std::array<const std::vector<Trip>*, 3> sets{&split.train, &split.val, &split.test};
      std::array<std::vector<FeaturizedTrip>, 3> raw;
      for (std::size_t i = 0; i < 3; ++i) raw[i] = featurize_trips(maps[i], *sets[i]);
      const NormStats stats = fit_norm(collect_vectors(raw[0]));
      for (std::size_t i = 0; i < 3; ++i)
        save_feature_dataset({stats, normalize(raw[i], stats)}, feature_paths[i]);
      text::write_file(stats_path, serialize_norm_stats(stats) + "\n");
    });
  }

  for (Scheme scheme : cfg.schemes) {
    const std::string sname(scheme_name(scheme));
    const SchemeConfig scfg{scheme, cfg.pup_near, cfg.pup_far};
    const fs::path train_samples = st.path("samples/" + sname + "_train.csv");
    const fs::path val_samples = st.path("samples/" + sname + "_val.csv");
    ordered_json acfg{{"scheme", sname}, {"pup_offsets", {cfg.pup_near, cfg.pup_far}}};
    st.run("associate_" + sname, acfg, {feature_paths[0], feature_paths[1]}, {train_samples, val_samples}, [&] {
      for (int k = 0; k < 2; ++k) {
        const auto ds = load_feature_dataset(feature_paths[k]);
        const double s = ds.stats.pat_sentinel();
        save_samples(build_dataset(ds.trips, scfg, s), k == 0 ? train_samples : val_samples);
      }
    });

    const fs::path model_path = st.path("models/" + sname + ".json");
    const fs::path history_path = st.path("models/" + sname + ".history.json");
    TrainConfig tcfg = cfg.train;
    tcfg.seed = derive_seed(cfg.seed, 200 + scheme_slot(scheme));
    const std::uint64_t init_seed = derive_seed(cfg.seed, 100 + scheme_slot(scheme));
    ordered_json tjson = ordered_json::parse(serialize_train_config(tcfg));
    tjson["init_seed"] = init_seed;
    tjson["scheme"] = sname;
    st.run("train_" + sname, tjson, {train_samples, val_samples}, {model_path, history_path}, [&] {
      const auto tr = load_samples(train_samples);
      const auto va = load_samples(val_samples);
      const auto arch = scheme == Scheme::Pointwise ? nn::Architecture::Baseline : nn::Architecture::Swmlp;
      TrainResult result = train(nn::init_model(init_seed, arch), tr, va, tcfg);
      save_checkpoint({std::move(result.model), scfg}, model_path);
      text::write_file(history_path, serialize_history(result.history));
    });

    const fs::path report_path = st.path("reports/" + sname + ".json");
    st.run("evaluate_" + sname, ordered_json::object(), {model_path, feature_paths[2]}, {report_path}, [&] {
      const Checkpoint ck = load_checkpoint(model_path);
      const auto ds = load_feature_dataset(feature_paths[2]);
      const Evaluation ev = evaluate(ck.model, ds.trips, ck.scheme, ds.stats.pat_sentinel(), cfg.threads);
      text::write_file(report_path, serialize_report(ev.report));
    });

    res.outcomes.push_back({scheme, parse_report(text::read_file(report_path), report_path.string()),
                            parse_history(text::read_file(history_path), history_path.string())});
  }

  // Speed traces of the first test trips every scheme can target.
  if (cfg.traces > 0) {
    const auto ds = load_feature_dataset(feature_paths[2]);
    std::vector<Checkpoint> models;
    std::vector<std::string> names;
    std::size_t min_len = 1;
    for (Scheme scheme : cfg.schemes) {
      models.push_back(load_checkpoint(st.path("models/" + std::string(scheme_name(scheme)) + ".json")));
      names.push_back(model_label(scheme));
      min_len = std::max(min_len, min_trip_length(models.back().scheme));
    }
    int written = 0;
    for (const auto& trip : ds.trips) {
      if (written >= cfg.traces) break;
      if (trip.size() < min_len) continue;
      std::vector<TripPrediction> preds;
      for (const auto& ck : models) preds.push_back(predict_trip(ck.model, trip, ck.scheme, ds.stats.pat_sentinel()));
      const Trace t = make_trace(preds, names);
      const auto base = st.path("traces/trip_" + std::to_string(trip.trip_id));
      emit_trace(t, fs::path(base.string() + ".csv"), TraceFormat::Csv);
      emit_trace(t, fs::path(base.string() + ".svg"), TraceFormat::Svg);
      ++written;
    }
  }

  res.metrics_table = format_metrics_table(res.outcomes);
  text::write_file(st.path("metrics_table.txt"), res.metrics_table);
  return res;
}

}  // namespace swmlp
