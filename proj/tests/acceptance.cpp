// Acceptance gate: one PASS/FAIL line per criterion. Exit status is the number of failures.
//
//   acceptance [--workdir DIR] [--skip-pipeline]

#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <functional>
#include <random>
#include <string>
#include <thread>
#include <vector>

#include "swmlp/association.hpp"
#include "swmlp/evaluation.hpp"
#include "swmlp/features.hpp"
#include "swmlp/neuralnet.hpp"
#include "swmlp/pipeline.hpp"
#include "swmlp/text_io.hpp"
#include "swmlp/training.hpp"
#include "test_util.hpp"

using namespace swmlp;
namespace fs = std::filesystem;
using Clock = std::chrono::steady_clock;

namespace {

// Pinned tolerances and budgets.
constexpr int kGradPairs = 100;
constexpr double kGradEpsilon = 1e-5;
constexpr double kGradTolerance = 1e-4;
constexpr double kGradBudgetSeconds = 10.0;
constexpr double kSgdDeltaTolerance = 1e-10;
constexpr int kSchemeTrials = 1000;
constexpr double kOverfitMse = 0.01;
constexpr int kOverfitEpochs = 2000;
constexpr double kOverfitBudgetSeconds = 60.0;
constexpr double kPfMargin = 0.10;
constexpr double kPipelineBudgetSeconds = 15.0 * 60.0;

struct Outcome {
  bool pass = false;
  std::string detail;
};

int failures = 0;

void report(const char* name, const Outcome& o) {
  std::printf("%s  %-28s %s\n", o.pass ? "PASS" : "FAIL", name, o.detail.c_str());
  std::fflush(stdout);
  if (!o.pass) ++failures;
}

void run(const char* name, const std::function<Outcome()>& check) {
  try {
    report(name, check());
  } catch (const std::exception& e) {
    report(name, {false, std::string("exception: ") + e.what()});
  }
}

double seconds_since(Clock::time_point t0) { return std::chrono::duration<double>(Clock::now() - t0).count(); }

std::string fmt(const char* f, double a, double b = 0.0, double c = 0.0) {
  char buf[256];
  std::snprintf(buf, sizeof buf, f, a, b, c);
  return buf;
}

Outcome gradient_exactness() {
  std::mt19937_64 rng(20240101);
  const auto t0 = Clock::now();
  double worst = 0.0;
  int bad = 0;
  for (int i = 0; i < kGradPairs; ++i) {
    const nn::Model m = nn::init_model(1000 + i, nn::Architecture::Swmlp);
    const double err = nn::gradient_check(m, swmlp::testing::random_sample(rng), kGradEpsilon);
    worst = std::max(worst, err);
    bad += !(err < kGradTolerance);
  }
  const double secs = seconds_since(t0);
  return {bad == 0 && secs < kGradBudgetSeconds,
          fmt("max rel err %.3g over 100 pairs (limit 1e-4), %.2f s (limit 10 s)", worst, secs)};
}

Outcome weight_sharing() {
  std::mt19937_64 rng(7);
  double worst = 0.0;
  bool identical = true;
  for (int rep = 0; rep < 20; ++rep) {
    std::vector<AssociatedSample> batch;
    for (int i = 0; i < 1 + rep; ++i) batch.push_back(swmlp::testing::random_sample(rng));
    for (auto kind : {OptimizerKind::Sgd, OptimizerKind::Adam}) {
      nn::Model model = nn::init_model(50 + rep, nn::Architecture::Swmlp);
      const nn::DenseLayer before = std::get<nn::SwmlpModel>(model).shared;
      const BatchStep step = batch_gradient(model, nn::make_batch(batch));
      OptimizerConfig hyper;
      hyper.kind = kind;
      hyper.learning_rate = kind == OptimizerKind::Sgd ? 0.05 : 1e-3;
      OptimizerState state;
      optimizer_step(model, step.grads, state, hyper);

      const auto& sw = std::get<nn::SwmlpModel>(model);
      for (int s = 1; s < nn::kStreams; ++s) identical &= sw.shared_for_stream(s) == sw.shared_for_stream(0);
      if (kind != OptimizerKind::Sgd) continue;

      nn::DenseLayer sum = step.grads.shared_streams[0];
      for (int s = 1; s < nn::kStreams; ++s) {
        sum.weights += step.grads.shared_streams[s].weights;
        sum.bias += step.grads.shared_streams[s].bias;
      }
      const nn::Matrix dw = sw.shared.weights - before.weights;
      const nn::Vector db = sw.shared.bias - before.bias;
      const nn::Matrix ew = -hyper.learning_rate * sum.weights;
      const nn::Vector eb = -hyper.learning_rate * sum.bias;
      const double rel = std::sqrt((dw - ew).squaredNorm() + (db - eb).squaredNorm()) /
                         std::sqrt(ew.squaredNorm() + eb.squaredNorm());
      worst = std::max(worst, rel);
    }
  }
  return {identical && worst <= kSgdDeltaTolerance,
          std::string(identical ? "streams bit-identical" : "streams DIFFER") +
              fmt(", SGD delta rel err %.3g (limit 1e-10)", worst)};
}

Outcome target_pat_independence() {
  std::mt19937_64 rng(11);
  std::uniform_real_distribution<double> raw_pat(0.0, 100.0);
  std::size_t checked = 0, changed = 0;
  const NormStats stats = [&] {
    std::vector<FeatureVector> vs;
    for (int i = 0; i < 100; ++i) {
      FeatureVector v = swmlp::testing::random_vector(rng);
      v[kPat] = raw_pat(rng);
      vs.push_back(v);
    }
    return fit_norm(vs);
  }();
  for (int rep = 0; rep < 50; ++rep) {
    const nn::SwmlpModel m = nn::init_swmlp(70 + rep);
    FeaturizedTrip trip;
    for (int i = 0; i < 15; ++i) {
      FeatureVector v = swmlp::testing::random_vector(rng);
      v[kPat] = raw_pat(rng);
      trip.features.push_back(apply_norm(v, stats));
      trip.speeds.push_back(5.0);
    }
    for (Scheme sc : {Scheme::Past, Scheme::PastFuture, Scheme::PunctualPast}) {
      const SchemeConfig cfg{sc, 5, 10};
      const auto base = build_samples(trip, cfg, stats.pat_sentinel());
      FeaturizedTrip perturbed = trip;
      for (auto& v : perturbed.features) {
        FeatureVector raw = invert_norm(v, stats);
        raw[kPat] = raw_pat(rng);
        v[kPat] = apply_norm(raw, stats)[kPat];
      }
      const auto other = build_samples(perturbed, cfg, stats.pat_sentinel());
      for (std::size_t i = 0; i < base.size(); ++i) {
        // Only the target's own PAT is compared; contexts are restored.
        AssociatedSample s = other[i];
        s.context_a = base[i].context_a;
        s.context_b = base[i].context_b;
        ++checked;
        changed += nn::swmlp_predict(m, s) != nn::swmlp_predict(m, base[i]);
      }
    }
  }
  return {changed == 0 && checked > 0,
          std::to_string(checked) + " masked samples, " + std::to_string(changed) + " predictions changed"};
}

Outcome scheme_counts() {
  std::mt19937_64 rng(13);
  std::uniform_int_distribution<std::size_t> len(3, 500);
  int wrong = 0;
  for (int i = 0; i < kSchemeTrials; ++i) {
    const std::size_t n = len(rng);
    FeaturizedTrip trip;
    trip.features.resize(n);
    trip.speeds.assign(n, 1.0);
    std::size_t brute_pa = 0, brute_pf = 0, brute_pup = 0;
    for (std::size_t t = 0; t < n; ++t) {
      brute_pa += t >= 2;
      brute_pf += t >= 1 && t + 1 < n;
      brute_pup += t >= 10;
    }
    const std::size_t pa = build_pa(trip).size();
    const std::size_t pf = build_pf(trip).size();
    const std::size_t pup = n >= 11 ? build_pup(trip, 5, 10).size() : 0;
    const std::size_t expect_pup = n > 10 ? n - 10 : 0;
    wrong += !(pa == n - 2 && pf == n - 2 && pup == expect_pup && pa == brute_pa && pf == brute_pf &&
               pup == brute_pup);
  }
  return {wrong == 0, std::to_string(kSchemeTrials) + " random lengths in [3,500], " + std::to_string(wrong) +
                          " mismatches against enumeration"};
}

bool report_identities(const MetricsReport& r, std::string& why) {
  for (const auto& t : r.per_trip)
    if (t.rmse != std::sqrt(t.mse)) {
      why = "trip " + std::to_string(t.trip_id) + " rmse != sqrt(mse)";
      return false;
    }
  if (!(r.rmse <= std::sqrt(r.mse))) {
    why = "aggregate violates mean(rmse) <= sqrt(mean(mse))";
    return false;
  }
  return true;
}

Outcome metric_identities(const std::vector<MetricsReport>& extra_reports) {
  std::mt19937_64 rng(17);
  std::string why;
  std::size_t reports = 0;
  for (int rep = 0; rep < 50; ++rep) {
    std::vector<FeaturizedTrip> trips;
    for (int t = 0; t < 20; ++t) {
      FeaturizedTrip trip;
      trip.trip_id = t;
      const std::size_t n = 3 + rng() % 60;
      for (std::size_t i = 0; i < n; ++i) {
        trip.features.push_back(swmlp::testing::random_vector(rng));
        trip.speeds.push_back(std::uniform_real_distribution<double>(0.0, 25.0)(rng));
      }
      trips.push_back(std::move(trip));
    }
    const Scheme sc = std::array{Scheme::Past, Scheme::PastFuture, Scheme::PunctualPast, Scheme::Pointwise}[rep % 4];
    const auto arch = sc == Scheme::Pointwise ? nn::Architecture::Baseline : nn::Architecture::Swmlp;
    const Evaluation ev = evaluate(nn::init_model(rep, arch), trips, {sc, 5, 10}, -0.5);
    if (!report_identities(ev.report, why)) return {false, why};
    ++reports;
  }
  for (const auto& r : extra_reports) {
    if (!report_identities(r, why)) return {false, "pipeline report: " + why};
    ++reports;
  }
  const double published_rmse = 2.57, published_mse = 8.67;
  const bool table_row = published_rmse <= std::sqrt(published_mse);
  return {table_row, std::to_string(reports) + " reports consistent; published row 2.57 <= sqrt(8.67) = " +
                         fmt("%.4f", std::sqrt(published_mse))};
}

Outcome overfit() {
  std::mt19937_64 rng(19);
  std::vector<AssociatedSample> toy;
  for (int i = 0; i < 64; ++i) toy.push_back(swmlp::testing::random_sample(rng));
  TrainConfig cfg;
  cfg.epochs = kOverfitEpochs;
  cfg.batch_size = 64;
  cfg.patience = kOverfitEpochs;
  cfg.seed = 23;
  const auto t0 = Clock::now();
  const TrainResult r = train(nn::init_model(29, nn::Architecture::Swmlp), toy, toy, cfg);
  const double secs = seconds_since(t0);
  const double rmse = sample_rmse(r.model, toy);
  const double mse = rmse * rmse;
  std::size_t first = r.history.epochs.size();
  for (const auto& e : r.history.epochs)
    if (e.val_rmse * e.val_rmse < kOverfitMse) {
      first = static_cast<std::size_t>(e.epoch);
      break;
    }
  return {mse < kOverfitMse && secs < kOverfitBudgetSeconds,
          fmt("training MSE %.3g (limit 0.01), first below limit at epoch %.0f, %.1f s (limit 60 s)", mse,
              static_cast<double>(first), secs)};
}

Outcome pat_formula() {
  const double v = pat(7.0, 50.0);
  return {v == 14.0, fmt("pat(7, 50) = %.17g", v)};
}

}  // namespace

int main(int argc, char** argv) {
  fs::path workdir;
  bool skip_pipeline = false;
  for (int i = 1; i < argc; ++i) {
    if (!std::strcmp(argv[i], "--workdir") && i + 1 < argc) workdir = argv[++i];
    else if (!std::strcmp(argv[i], "--skip-pipeline")) skip_pipeline = true;
    else {
      std::fprintf(stderr, "usage: acceptance [--workdir DIR] [--skip-pipeline]\n");
      return 2;
    }
  }
  std::optional<swmlp::testing::TempDir> tmp;
  if (workdir.empty()) {
    tmp.emplace("acceptance");
    workdir = tmp->path();
  }

  run("gradient_exactness", gradient_exactness);
  run("weight_sharing", weight_sharing);
  run("target_pat_independence", target_pat_independence);
  run("scheme_counts", scheme_counts);

  std::vector<MetricsReport> pipeline_reports;
  if (!skip_pipeline) {
    PipelineConfig cfg = default_pipeline_config();
    cfg.threads = static_cast<int>(std::max(1u, std::thread::hardware_concurrency()));
    const auto t0 = Clock::now();
    std::optional<PipelineResult> first;
    try {
      first = run_pipeline(cfg, workdir / "run1", false);
    } catch (const std::exception& e) {
      report("end_to_end_ordering", {false, std::string("pipeline failed: ") + e.what()});
    }
    const double secs = seconds_since(t0);
    if (first) {
      std::fputs(first->metrics_table.c_str(), stdout);
      std::map<Scheme, double> rmse;
      for (const auto& o : first->outcomes) {
        rmse[o.scheme] = o.report.rmse;
        pipeline_reports.push_back(o.report);
      }
      const double base = rmse.at(Scheme::Pointwise);
      const double gain = (base - rmse.at(Scheme::PastFuture)) / base;
      std::size_t trips = 0;
      for (const auto& r : cfg.regions) trips += static_cast<std::size_t>(r.n_trips);
      const bool ok = gain >= kPfMargin && rmse.at(Scheme::Past) < base && secs < kPipelineBudgetSeconds;
      report("end_to_end_ordering",
             {ok, fmt("P&F %.4f vs baseline %.4f (%.1f%% better, need 10%%); ", rmse.at(Scheme::PastFuture), base,
                      100.0 * gain) +
                      fmt("Pa %.4f; PuP %.4f (not gated); ", rmse.at(Scheme::Past), rmse.at(Scheme::PunctualPast)) +
                      std::to_string(trips) + " trips; " + fmt("%.0f s (limit 900 s)", secs)});

      run("determinism", [&]() -> Outcome {
        const PipelineResult second = run_pipeline(cfg, workdir / "run2", false);
        const bool same = second.metrics_table == first->metrics_table &&
                          text::read_file(workdir / "run1/metrics_table.txt") ==
                              text::read_file(workdir / "run2/metrics_table.txt");
        return {same, same ? "rerun metrics table byte-identical" : "metrics tables differ"};
      });
    } else {
      report("determinism", {false, "first pipeline run failed"});
    }
  }

  run("metric_identities", [&] { return metric_identities(pipeline_reports); });
  run("overfit_sanity", overfit);
  run("pat_formula", pat_formula);

  std::printf("%d criteria failed\n", failures);
  return failures;
}
