#include <algorithm>
#include <cmath>
#include <random>
#include <vector>

#include <gtest/gtest.h>

#include "stochdrive/errors.hpp"
#include "stochdrive/features.hpp"

namespace stochdrive {
namespace {

struct Series {
  std::vector<double> p, v, a;
  FollowerSamples view() const { return {p, v, a}; }
};

// 1 s horizon at dt=0.1 with a constant leader gap offset.
FeatureContext flat_context(std::size_t n, double lead_pos, double lead_v,
                            double v_d, double tau = 1.0, double dt = 0.1) {
  FeatureContext ctx;
  ctx.leader_position.assign(n, lead_pos);
  ctx.leader_velocity.assign(n, lead_v);
  ctx.desired_speed = v_d;
  ctx.headway = tau;
  ctx.safe_gap = 5.0;
  ctx.dt = dt;
  return ctx;
}

TEST(Features, ConstantUnitAccelerationGivesUnitFa) {
  Series s{std::vector<double>(11, 0.0), std::vector<double>(11, 0.0),
           std::vector<double>(11, 1.0)};
  const auto ctx = flat_context(11, 20, 0, 0);
  const auto f = compute_features(s.view(), ctx, PhaseLabel::SteadyFollowing);
  EXPECT_NEAR(f.at(Feature::Accel), 1.0, 1e-12);
}

TEST(Features, MatchingSpeedsZeroDeviationTerms) {
  Series s{std::vector<double>(11, 0.0), std::vector<double>(11, 12.0),
           std::vector<double>(11, 0.0)};
  const auto ctx = flat_context(11, 30, 12, 12);
  const auto f = compute_features(s.view(), ctx, PhaseLabel::UnsteadyFollowing);
  EXPECT_EQ(f.at(Feature::DesiredSpeed), 0.0);
  EXPECT_EQ(f.at(Feature::RelativeSpeed), 0.0);
}

TEST(Features, ConstantGapFreeTermClosedForm) {
  Series s{std::vector<double>(11, 0.0), std::vector<double>(11, 0.0),
           std::vector<double>(11, 0.0)};
  const auto ctx = flat_context(11, 10, 0, 0);
  const auto f = compute_features(s.view(), ctx, PhaseLabel::FreeMotion);
  EXPECT_NEAR(f.at(Feature::FreeGap), std::exp(-10.0), 1e-15);
  EXPECT_NEAR(f.at(Feature::FreeGap), 4.54e-5, 1e-7);
}

TEST(Features, GapOnSteadyTargetZeroesFcd) {
  Series s;
  FeatureContext ctx;
  for (int k = 0; k <= 10; ++k) {
    const double t = 0.1 * k;
    s.p.push_back(10 * t);
    s.v.push_back(10);
    s.a.push_back(0);
    ctx.leader_position.push_back(10 * t + 25);
    ctx.leader_velocity.push_back(10);
  }
  ctx.desired_speed = 10;
  ctx.headway = 2.0;
  ctx.safe_gap = 5.0;
  const auto f = compute_features(s.view(), ctx, PhaseLabel::SteadyFollowing);
  EXPECT_NEAR(f.at(Feature::CarFollowingGap), 0.0, 1e-20);
}

TEST(Features, KeySetFollowsPhase) {
  EXPECT_EQ(feature_set(PhaseLabel::SteadyFollowing).size(), 4u);
  EXPECT_EQ(feature_set(PhaseLabel::FreeMotion).size(), 3u);
  EXPECT_EQ(feature_set(PhaseLabel::UnsteadyFollowing).size(), 4u);
  Series s{std::vector<double>(5, 0.0), std::vector<double>(5, 3.0),
           std::vector<double>(5, 0.5)};
  const auto ctx = flat_context(5, 20, 4, 6);
  for (auto phase : kAllPhases) {
    const auto f = compute_features(s.view(), ctx, phase);
    EXPECT_EQ(f.phase, phase);
    EXPECT_EQ(f.size(), feature_set(phase).size());
    const auto arr = compute_feature_array(s.view(), ctx, phase);
    for (std::size_t i = 0; i < kNumFeatures; ++i) {
      const auto set = feature_set(phase);
      const bool present =
          std::find(set.begin(), set.end(), static_cast<Feature>(i)) != set.end();
      if (!present) {
        EXPECT_EQ(arr[i], 0.0);
      }
    }
    EXPECT_THROW(f.at(phase == PhaseLabel::FreeMotion ? Feature::SafeGap
                                                      : Feature::FreeGap),
                 DomainError);
  }
}

TEST(Features, GridMismatchIsDomainError) {
  Series s{std::vector<double>(10, 0.0), std::vector<double>(10, 0.0),
           std::vector<double>(10, 0.0)};
  const auto ctx = flat_context(11, 20, 0, 0);
  EXPECT_THROW(compute_features(s.view(), ctx, PhaseLabel::FreeMotion),
               DomainError);
}

// Smooth random trajectory sampled at dt over 1 s. Acceleration, speed
// errors and gap errors keep one sign over the window.
Series smooth(std::mt19937_64& rng, double dt, FeatureContext& ctx) {
  std::uniform_real_distribution<double> u(-1, 1);
  const double a1 = 0.2 + 0.1 * u(rng), a0 = (u(rng) < 0 ? -1 : 1) * (0.5 + 0.1 * u(rng));
  const double w = 0.9 + 0.6 * u(rng), v0 = 10 + 1 * u(rng);
  const double lv = v0 + (u(rng) < 0 ? -1.5 : 1.5), g0 = 30 + 5 * u(rng);
  const auto n = static_cast<std::size_t>(std::llround(1.0 / dt)) + 1;
  Series s;
  ctx = FeatureContext{};
  for (std::size_t k = 0; k < n; ++k) {
    const double t = dt * static_cast<double>(k);
    s.a.push_back(a0 + a1 * std::sin(w * t));
    s.v.push_back(v0 + a0 * t + a1 * (1 - std::cos(w * t)) / w);
    s.p.push_back(v0 * t + 0.5 * a0 * t * t + a1 * (t / w - std::sin(w * t) / (w * w)));
    ctx.leader_position.push_back(g0 + lv * t);
    ctx.leader_velocity.push_back(lv);
  }
  ctx.desired_speed = 14;
  ctx.headway = 1.2;
  ctx.safe_gap = 5;
  ctx.dt = dt;
  return s;
}

TEST(Features, NonNegativeAndRefinementStable) {
  std::mt19937_64 rng(41);
  for (int trial = 0; trial < 50; ++trial) {
    auto rng_copy = rng;
    FeatureContext coarse_ctx, fine_ctx;
    const auto coarse = smooth(rng, 0.1, coarse_ctx);
    const auto fine = smooth(rng_copy, 0.05, fine_ctx);
    for (auto phase : kAllPhases) {
      const auto fc = compute_feature_array(coarse.view(), coarse_ctx, phase);
      const auto ff = compute_feature_array(fine.view(), fine_ctx, phase);
      for (std::size_t i = 0; i < kNumFeatures; ++i) {
        EXPECT_GE(fc[i], 0.0);
        if (ff[i] > 1e-6) {
          EXPECT_LT(std::abs(fc[i] - ff[i]) / ff[i], 0.01)
              << "feature " << i << " trial " << trial;
        }
      }
    }
  }
}

TEST(Features, MonotonicitySpotChecks) {
  std::mt19937_64 rng(2);
  FeatureContext ctx;
  auto s = smooth(rng, 0.1, ctx);
  const auto base = compute_feature_array(s.view(), ctx, PhaseLabel::SteadyFollowing);
  auto bigger = s;
  for (auto& a : bigger.a) a *= 1.5;
  EXPECT_GE(compute_feature_array(bigger.view(), ctx, PhaseLabel::SteadyFollowing)[0],
            base[0]);
  auto closer = s;
  for (auto& v : closer.v) v += 0.5 * (ctx.desired_speed - v);
  EXPECT_LE(compute_feature_array(closer.view(), ctx, PhaseLabel::SteadyFollowing)[1],
            base[1]);
}

TEST(Features, LinearTimeDeterministic) {
  std::mt19937_64 rng(8);
  FeatureContext ctx;
  const auto s = smooth(rng, 0.001, ctx);
  const auto a = compute_feature_array(s.view(), ctx, PhaseLabel::UnsteadyFollowing);
  const auto b = compute_feature_array(s.view(), ctx, PhaseLabel::UnsteadyFollowing);
  EXPECT_EQ(a, b);
}

TEST(Headway, IndicatorExamples) {
  std::vector<double> d{20, 20}, vh{10, 10}, vp{10, 10};
  auto ind = headway_indicators(d, vh, vp);
  EXPECT_DOUBLE_EQ(ind.mean_thw, 2.0);
  EXPECT_DOUBLE_EQ(ind.mean_ttci, 0.0);

  d = {25};
  vh = {15};
  vp = {10};
  EXPECT_DOUBLE_EQ(headway_indicators(d, vh, vp).mean_ttci, 0.2);

  d = {30};
  vh = {0};
  vp = {0};
  ind = headway_indicators(d, vh, vp);
  EXPECT_EQ(ind.mean_thw, 3600.0);
  EXPECT_EQ(ind.mean_gap, 30.0);
  EXPECT_EQ(ind.mean_speed, 0.0);
}

TEST(Headway, ObservedHeadwayReproducesSteadyGap) {
  std::vector<double> gap{25, 25, 25}, v{10, 10, 10};
  EXPECT_DOUBLE_EQ(observed_headway(gap, v, 5.0), 2.0);
  std::vector<double> stopped{0, 0, 0};
  EXPECT_DOUBLE_EQ(observed_headway(gap, stopped, 5.0), 2.0);
  std::vector<double> tight{3, 3, 3};
  EXPECT_DOUBLE_EQ(observed_headway(tight, v, 5.0), 0.05);
}

TEST(Headway, DemonstrationContextUsesLeaderMaxSpeed) {
  std::vector<TraceSample> slice;
  for (int k = 0; k <= 10; ++k) {
    const double t = 0.1 * k;
    slice.push_back({t, 10 * t, 10, 0, 25 + 10 * t, 10 + 0.1 * k});
  }
  const auto ctx = demonstration_context(slice, 0.1, 5.0);
  EXPECT_DOUBLE_EQ(ctx.desired_speed, 11.0);
  EXPECT_EQ(ctx.samples(), 11u);
  EXPECT_NEAR(ctx.horizon(), 1.0, 1e-12);
  EXPECT_NEAR(ctx.headway, 2.0, 1e-12);
  const auto f = observed_features(slice, ctx, PhaseLabel::SteadyFollowing);
  EXPECT_NEAR(f.at(Feature::CarFollowingGap), 0.0, 1e-20);
}

}  // namespace
}  // namespace stochdrive
