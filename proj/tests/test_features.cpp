#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "swmlp/errors.hpp"
#include "swmlp/features.hpp"
#include "swmlp/map_generator.hpp"
#include "test_util.hpp"

using namespace swmlp;
using swmlp::testing::make_link;

TEST(Pat, WorkedExample) { EXPECT_EQ(pat(7.0, 50.0), 14.0); }

TEST(Pat, LinkStartAndEnd) {
  for (double len : {1.0, 37.5, 50.0, 812.25}) EXPECT_EQ(pat(0.0, len), 0.0);
  EXPECT_EQ(pat(50.0, 50.0), 100.0);
}

TEST(Pat, OutOfRangeThrows) {
  EXPECT_THROW(pat(51.0, 50.0), DomainError);
  EXPECT_THROW(pat(-1.0, 50.0), DomainError);
  EXPECT_THROW(pat(1.0, 0.0), DomainError);
}

namespace {

// Link 10 with predecessors {1} and successors {2,3}: three distinct neighbors.
LinkMap example_map() {
  LinkMap m;
  Link l = make_link(10, 50.0, 13.9);
  l.priority = 2;
  l.light_at_start = false;
  l.light_at_end = true;
  l.lanes = 2;
  l.successors = {2, 3};
  m.links.emplace(10, l);
  Link a = make_link(1, 80.0);
  a.successors = {10};
  m.links.emplace(1, a);
  m.links.emplace(2, make_link(2, 80.0));
  m.links.emplace(3, make_link(3, 80.0));
  derive_predecessors(m);
  return m;
}

}  // namespace

TEST(FeaturizePoint, WorkedExample) {
  const LinkMap m = example_map();
  const FeatureVector v = featurize_point(m, {10, 7.0, 9.0});
  const FeatureVector expected{2, 0, 1, 3, 2, 13.9, 50, 14};
  EXPECT_EQ(v, expected);
}

TEST(FeaturizePoint, LinkStartAndPurity) {
  const LinkMap m = example_map();
  const DataPoint p{10, 0.0, 4.0};
  EXPECT_EQ(featurize_point(m, p)[kPat], 0.0);
  EXPECT_EQ(featurize_point(m, p), featurize_point(m, p));
}

TEST(FeaturizePoint, UnknownLink) { EXPECT_THROW(featurize_point(example_map(), {99, 0.0, 1.0}), std::out_of_range); }

TEST(FitNorm, TwoVectorsHandComputed) {
  FeatureVector zero{}, two{};
  two.fill(2.0);
  const std::vector<FeatureVector> vs{zero, two};
  const NormStats s = fit_norm(vs);
  for (std::size_t k = 0; k < kFeatureCount; ++k) {
    EXPECT_EQ(s.mean[k], 1.0);
    EXPECT_EQ(s.std[k], 1.0);
    EXPECT_FALSE(s.constant[k]);
  }
}

TEST(FitNorm, SingleVectorAllConstant) {
  const FeatureVector v{1, 2, 3, 4, 5, 6, 7, 8};
  const NormStats s = fit_norm(std::vector<FeatureVector>{v});
  EXPECT_EQ(s.mean, v);
  for (std::size_t k = 0; k < kFeatureCount; ++k) {
    EXPECT_TRUE(s.constant[k]);
    EXPECT_EQ(s.std[k], 1.0);
  }
}

TEST(FitNorm, ConstantColumnAmongVarying) {
  std::vector<FeatureVector> vs;
  for (int i = 0; i < 5; ++i) {
    FeatureVector v;
    v.fill(static_cast<double>(i));
    v[kLanes] = 2.0;
    vs.push_back(v);
  }
  const NormStats s = fit_norm(vs);
  EXPECT_TRUE(s.constant[kLanes]);
  EXPECT_EQ(s.std[kLanes], 1.0);
  EXPECT_GT(s.std[kPriority], 0.0);
  EXPECT_FALSE(s.constant[kPriority]);
}

TEST(FitNorm, EmptyThrows) { EXPECT_THROW(fit_norm(std::vector<FeatureVector>{}), DomainError); }

TEST(ApplyNorm, MeanMapsToZeroAndRoundTrips) {
  std::mt19937_64 rng(3);
  std::vector<FeatureVector> vs;
  for (int i = 0; i < 50; ++i) vs.push_back(swmlp::testing::random_vector(rng));
  const NormStats s = fit_norm(vs);
  for (double x : apply_norm(s.mean, s)) EXPECT_EQ(x, 0.0);
  for (const auto& v : vs) {
    const FeatureVector back = invert_norm(apply_norm(v, s), s);
    for (std::size_t k = 0; k < kFeatureCount; ++k) EXPECT_NEAR(back[k], v[k], 1e-12);
  }
}

TEST(ApplyNorm, NormalizedTrainingColumnsAreStandard) {
  GridMapConfig g;
  g.seed = 21;
  const LinkMap m = generate_grid_map(g);
  SimConfig cfg;
  cfg.n_trips = 60;
  const auto trips = featurize_trips(m, simulate_trips(m, cfg));
  const NormStats s = fit_norm(collect_vectors(trips));
  const NormStats again = fit_norm(collect_vectors(normalize(trips, s)));
  for (std::size_t k = 0; k < kFeatureCount; ++k) {
    EXPECT_NEAR(again.mean[k], 0.0, 1e-9);
    if (!s.constant[k]) {
      EXPECT_NEAR(again.std[k], 1.0, 1e-9);
    }
  }
}

TEST(ApplyNorm, PatSentinelIsNormalizedZero) {
  std::mt19937_64 rng(4);
  std::vector<FeatureVector> vs;
  for (int i = 0; i < 10; ++i) vs.push_back(swmlp::testing::random_vector(rng));
  const NormStats s = fit_norm(vs);
  FeatureVector raw{};
  EXPECT_EQ(apply_norm(raw, s)[kPat], s.pat_sentinel());
}

TEST(FeaturizeTrip, PatMonotoneWithinLink) {
  GridMapConfig g;
  g.seed = 5;
  const LinkMap m = generate_grid_map(g);
  SimConfig cfg;
  cfg.n_trips = 40;
  for (const Trip& t : simulate_trips(m, cfg)) {
    const FeaturizedTrip f = featurize_trip(m, t);
    ASSERT_EQ(f.size(), t.points.size());
    for (std::size_t i = 1; i < f.size(); ++i)
      if (t.points[i].link_id == t.points[i - 1].link_id) {
        EXPECT_GE(f.features[i][kPat], f.features[i - 1][kPat]);
      }
    for (std::size_t i = 0; i < f.size(); ++i) EXPECT_EQ(f.speeds[i], t.points[i].speed);
  }
}

TEST(FeatureFile, RoundTripIsExact) {
  GridMapConfig g;
  g.seed = 6;
  const LinkMap m = generate_grid_map(g);
  SimConfig cfg;
  cfg.n_trips = 20;
  const auto raw = featurize_trips(m, simulate_trips(m, cfg));
  const NormStats s = fit_norm(collect_vectors(raw));
  const FeatureDataset ds{s, normalize(raw, s)};
  const FeatureDataset back = parse_feature_dataset(serialize_feature_dataset(ds));
  EXPECT_EQ(back.stats, ds.stats);
  EXPECT_EQ(back.trips, ds.trips);
  EXPECT_EQ(parse_norm_stats(serialize_norm_stats(s)), s);
}

TEST(FeatureFile, RejectsForeignInput) {
  EXPECT_THROW(parse_feature_dataset("trip_id,x\n1,2\n"), ParseError);
  EXPECT_THROW(parse_norm_stats("{\"mean\":[1]}"), ParseError);
}
