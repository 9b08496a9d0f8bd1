#include <gtest/gtest.h>

#include <random>

#include "swmlp/association.hpp"
#include "swmlp/errors.hpp"
#include "test_util.hpp"

using namespace swmlp;

namespace {

// Point i has every feature equal to i and pat 10+i, speed 100+i, so sources are recognizable.
FeaturizedTrip numbered_trip(std::size_t n, std::int64_t id = 1) {
  FeaturizedTrip t;
  t.trip_id = id;
  for (std::size_t i = 0; i < n; ++i) {
    FeatureVector v;
    v.fill(static_cast<double>(i));
    v[kPat] = 10.0 + static_cast<double>(i);
    t.features.push_back(v);
    t.speeds.push_back(100.0 + static_cast<double>(i));
  }
  return t;
}

std::size_t source_of(const FeatureVector& v) { return static_cast<std::size_t>(v[kPriority]); }

// Brute-force enumerator: every t for which the scheme's context indices exist.
std::vector<std::size_t> enumerate_targets(std::size_t n, const SchemeConfig& cfg) {
  std::vector<std::size_t> out;
  for (long t = 0; t < static_cast<long>(n); ++t) {
    long a = 0, b = 0;
    switch (cfg.scheme) {
      case Scheme::Past: a = t - 2; b = t - 1; break;
      case Scheme::PastFuture: a = t - 1; b = t + 1; break;
      case Scheme::PunctualPast: a = t - cfg.pup_far; b = t - cfg.pup_near; break;
      case Scheme::Pointwise: a = b = t; break;
    }
    if (a >= 0 && b >= 0 && a < static_cast<long>(n) && b < static_cast<long>(n)) out.push_back(t);
  }
  return out;
}

}  // namespace

TEST(Pa, MinimalTrip) {
  const auto s = build_pa(numbered_trip(3));
  ASSERT_EQ(s.size(), 1u);
  EXPECT_EQ(s[0].provenance.target_index, 2u);
  EXPECT_EQ(source_of(s[0].context_a), 0u);
  EXPECT_EQ(source_of(s[0].context_b), 1u);
}

TEST(Pa, CountAndShortTrip) {
  EXPECT_EQ(build_pa(numbered_trip(10)).size(), 8u);
  EXPECT_THROW(build_pa(numbered_trip(2)), DomainError);
}

TEST(Pf, MinimalTripAndBoundaries) {
  const auto s3 = build_pf(numbered_trip(3));
  ASSERT_EQ(s3.size(), 1u);
  EXPECT_EQ(s3[0].provenance.target_index, 1u);
  const auto s = build_pf(numbered_trip(10));
  ASSERT_EQ(s.size(), 8u);
  for (const auto& x : s) {
    EXPECT_NE(x.provenance.target_index, 0u);
    EXPECT_NE(x.provenance.target_index, 9u);
    EXPECT_EQ(source_of(x.context_a) + 1, x.provenance.target_index);
    EXPECT_EQ(source_of(x.context_b), x.provenance.target_index + 1);
  }
}

TEST(PuP, ElevenPoints) {
  const auto s = build_pup(numbered_trip(11), 5, 10);
  ASSERT_EQ(s.size(), 1u);
  EXPECT_EQ(s[0].provenance.target_index, 10u);
  EXPECT_EQ(source_of(s[0].context_a), 0u);
  EXPECT_EQ(source_of(s[0].context_b), 5u);
}

TEST(PuP, CountAndPreconditions) {
  EXPECT_EQ(build_pup(numbered_trip(20), 5, 10).size(), 10u);
  EXPECT_THROW(build_pup(numbered_trip(20), 10, 5), DomainError);
  EXPECT_THROW(build_pup(numbered_trip(20), 5, 5), DomainError);
  EXPECT_THROW(build_pup(numbered_trip(10), 5, 10), DomainError);
}

TEST(Mask, ZeroesPatOnly) {
  FeatureVector v{2, 0, 1, 3, 2, 13.9, 50, 14};
  const FeatureVector m = mask_target_pat(v);
  EXPECT_EQ(m[kPat], 0.0);
  for (std::size_t k = 0; k < kPat; ++k) EXPECT_EQ(m[k], v[k]);
  FeatureVector z = v;
  z[kPat] = 0.0;
  EXPECT_EQ(mask_target_pat(z), z);
  EXPECT_EQ(mask_target_pat(m), m);
}

TEST(Samples, TargetMaskedContextsIntactLabelsFromSource) {
  const double sentinel = -1.25;
  for (Scheme sc : {Scheme::Past, Scheme::PastFuture, Scheme::PunctualPast}) {
    const auto samples = build_samples(numbered_trip(25), {sc, 5, 10}, sentinel);
    for (const auto& s : samples) {
      const std::size_t t = s.provenance.target_index;
      EXPECT_EQ(s.target[kPat], sentinel);
      EXPECT_EQ(source_of(s.target), t);
      EXPECT_EQ(s.label, 100.0 + static_cast<double>(t));
      EXPECT_EQ(s.context_a[kPat], 10.0 + static_cast<double>(source_of(s.context_a)));
      EXPECT_EQ(s.context_b[kPat], 10.0 + static_cast<double>(source_of(s.context_b)));
      EXPECT_EQ(s.provenance.scheme, sc);
    }
  }
}

TEST(Samples, PointwiseKeepsPatAndZeroContexts) {
  const auto s = build_pointwise(numbered_trip(4));
  ASSERT_EQ(s.size(), 4u);
  for (std::size_t i = 0; i < 4; ++i) {
    EXPECT_EQ(s[i].provenance.target_index, i);
    EXPECT_EQ(s[i].target[kPat], 10.0 + static_cast<double>(i));
    EXPECT_EQ(s[i].context_a, FeatureVector{});
    EXPECT_EQ(s[i].context_b, FeatureVector{});
  }
}

TEST(Samples, CountsMatchBruteForceForRandomLengths) {
  std::mt19937_64 rng(11);
  std::uniform_int_distribution<std::size_t> len(3, 120);
  for (int rep = 0; rep < 200; ++rep) {
    const std::size_t n = len(rng);
    for (Scheme sc : {Scheme::Past, Scheme::PastFuture, Scheme::PunctualPast, Scheme::Pointwise}) {
      const SchemeConfig cfg{sc, 5, 10};
      const auto expected = enumerate_targets(n, cfg);
      EXPECT_EQ(target_indices(n, cfg), expected);
      if (n < min_trip_length(cfg)) {
        EXPECT_TRUE(expected.empty());
        continue;
      }
      const auto samples = build_samples(numbered_trip(n), cfg, 0.0);
      ASSERT_EQ(samples.size(), expected.size());
      for (std::size_t i = 0; i < samples.size(); ++i) EXPECT_EQ(samples[i].provenance.target_index, expected[i]);
    }
  }
}

TEST(Dataset, SkipsShortTripsAndKeepsOrder) {
  const std::vector<FeaturizedTrip> trips{numbered_trip(12, 1), numbered_trip(5, 2), numbered_trip(11, 3)};
  std::size_t skipped = 0;
  const auto s = build_dataset(trips, {Scheme::PunctualPast, 5, 10}, 0.0, &skipped);
  EXPECT_EQ(skipped, 1u);
  ASSERT_EQ(s.size(), 3u);
  EXPECT_EQ(s[0].provenance.trip_id, 1);
  EXPECT_EQ(s[2].provenance.trip_id, 3);
}

TEST(Dataset, DeterministicAndFileRoundTrip) {
  const std::vector<FeaturizedTrip> trips{numbered_trip(12, 4), numbered_trip(30, 5)};
  for (Scheme sc : {Scheme::Past, Scheme::PastFuture, Scheme::PunctualPast, Scheme::Pointwise}) {
    const auto s = build_dataset(trips, {sc, 5, 10}, -0.3);
    EXPECT_EQ(s, build_dataset(trips, {sc, 5, 10}, -0.3));
    EXPECT_EQ(parse_samples(serialize_samples(s)), s);
  }
}

TEST(SchemeNames, RoundTrip) {
  for (Scheme sc : {Scheme::Past, Scheme::PastFuture, Scheme::PunctualPast, Scheme::Pointwise})
    EXPECT_EQ(parse_scheme(scheme_name(sc)), sc);
  EXPECT_FALSE(parse_scheme("p&f").has_value());
}
