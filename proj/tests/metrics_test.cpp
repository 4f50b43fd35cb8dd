#include <algorithm>
#include <cmath>
#include <random>
#include <vector>

#include <gtest/gtest.h>

#include "stochdrive/errors.hpp"
#include "stochdrive/metrics.hpp"
#include "test_util.hpp"

namespace stochdrive {
namespace {

TEST(Rmse, Examples) {
  const std::vector<double> a{1, 2, 3, 4}, off{3, 4, 5, 6};
  EXPECT_EQ(rmse_series(a, a), 0.0);
  EXPECT_DOUBLE_EQ(rmse_series(a, off), 2.0);
  const std::vector<double> z(4, 0.0), alt{1, -1, 1, -1};
  EXPECT_DOUBLE_EQ(rmse_series(z, alt), 1.0);
  EXPECT_THROW(rmse_series(a, std::vector<double>{1, 2}), DomainError);
  EXPECT_THROW(rmse_series(std::vector<double>{}, std::vector<double>{}), DomainError);
}

TEST(Resample, GridEndpointsAndKnots) {
  const auto g = uniform_grid(1.05, 0.1);
  EXPECT_EQ(g.front(), 0.0);
  EXPECT_EQ(g.back(), 1.05);
  for (std::size_t i = 1; i < g.size(); ++i) EXPECT_GT(g[i], g[i - 1]);
  const auto exact = uniform_grid(1.0, 0.1);
  EXPECT_EQ(exact.size(), 11u);

  const std::vector<double> t{0, 0.5, 1.5, 2.0}, y{1, 3, -1, 4};
  const auto r = resample_linear(t, y, t);
  EXPECT_EQ(r, y);
  const std::vector<double> q{0.25, 1.0, 1.75};
  const auto m = resample_linear(t, y, q);
  EXPECT_DOUBLE_EQ(m[0], 2.0);
  EXPECT_DOUBLE_EQ(m[1], 1.0);
  EXPECT_DOUBLE_EQ(m[2], 1.5);
}

LeaderFollowerTrace ramp_trace(double v0, double a, std::string id) {
  std::vector<TraceSample> s;
  for (int k = 0; k <= 100; ++k) {
    const double t = 0.1 * k;
    s.push_back({t, v0 * t + 0.5 * a * t * t, v0 + a * t, a, 200 + 30 * t, 30});
  }
  return make_trace(std::move(s), std::move(id));
}

RolloutResult matching_rollout(const MeanSeries& m, std::string scenario, long id,
                               double speed_offset = 0.0) {
  RolloutResult r;
  r.scenario_id = std::move(scenario);
  r.sample_id = id;
  for (std::size_t k = 0; k < m.t.size(); ++k) {
    r.states.push_back({m.t[k], 50, m.speed[k] + speed_offset, 30, 0});
    r.accel.push_back(m.accel[k]);
    r.theta_segment.push_back(0);
  }
  return r;
}

TEST(Evaluate, GeneratedEqualToMeanScoresZero) {
  std::vector<LeaderFollowerTrace> obs{ramp_trace(10, 0.5, "a"), ramp_trace(12, 0.1, "b")};
  const auto grid = uniform_grid(10.0, 0.1);
  const auto mean = mean_observed(obs, grid);
  EXPECT_NEAR(mean.speed[0], 11.0, 1e-12);
  EXPECT_NEAR(mean.accel[5], 0.3, 1e-12);
  ObservedByScenario o{{"s", obs}};
  GeneratedByScenario g{{"s", {matching_rollout(mean, "s", 0)}}};
  const auto score = evaluate(o, g);
  EXPECT_NEAR(score.speed_rmse, 0.0, 1e-12);
  EXPECT_NEAR(score.accel_rmse, 0.0, 1e-12);
}

TEST(Evaluate, AveragesSamplesThenScenarios) {
  std::vector<LeaderFollowerTrace> obs{ramp_trace(10, 0.2, "a")};
  const auto mean = mean_observed(obs, uniform_grid(10.0, 0.1));
  ObservedByScenario o{{"x", obs}, {"y", obs}};
  GeneratedByScenario g{
      {"x", {matching_rollout(mean, "x", 0, 1.0), matching_rollout(mean, "x", 1, 3.0)}},
      {"y", {matching_rollout(mean, "y", 0, 6.0)}}};
  const auto score = evaluate(o, g);
  ASSERT_EQ(score.scenarios.size(), 2u);
  EXPECT_NEAR(score.scenarios[0].speed_rmse, 2.0, 1e-9);
  EXPECT_NEAR(score.scenarios[1].speed_rmse, 6.0, 1e-9);
  EXPECT_NEAR(score.speed_rmse, 4.0, 1e-9);
  EXPECT_EQ(score.scenarios[0].generated_samples, 2u);
  EXPECT_EQ(score.scenarios[0].observed_traces, 1u);
}

TEST(Evaluate, PermutationInvariant) {
  std::vector<LeaderFollowerTrace> obs{ramp_trace(10, 0.2, "a"), ramp_trace(9, 0.4, "b"),
                                       ramp_trace(11, 0.0, "c")};
  const auto mean = mean_observed(obs, uniform_grid(10.0, 0.1));
  std::vector<RolloutResult> gen;
  for (int i = 0; i < 5; ++i) gen.push_back(matching_rollout(mean, "s", i, 0.3 * i - 0.5));
  const auto a = evaluate({{"s", obs}}, {{"s", gen}});
  std::reverse(obs.begin(), obs.end());
  std::rotate(gen.begin(), gen.begin() + 2, gen.end());
  const auto b = evaluate({{"s", obs}}, {{"s", gen}});
  EXPECT_NEAR(a.speed_rmse, b.speed_rmse, 1e-12);
  EXPECT_NEAR(a.accel_rmse, b.accel_rmse, 1e-12);
}

TEST(Evaluate, CoarserGridAndShorterSpan) {
  std::vector<LeaderFollowerTrace> obs{ramp_trace(10, 0.5, "a")};
  // Generated at 0.2 s over 8 s with exact ramp speeds.
  RolloutResult r;
  r.scenario_id = "s";
  for (int k = 0; k <= 40; ++k) {
    const double t = 0.2 * k;
    r.states.push_back({t, 50, 10 + 0.5 * t, 30, 0});
    r.accel.push_back(0.5);
    r.theta_segment.push_back(0);
  }
  const auto score = evaluate({{"s", obs}}, {{"s", {r}}});
  EXPECT_NEAR(score.speed_rmse, 0.0, 1e-9);
  EXPECT_NEAR(score.accel_rmse, 0.0, 1e-9);
}

TEST(Evaluate, MissingScenarioSkippedWithWarning) {
  std::vector<LeaderFollowerTrace> obs{ramp_trace(10, 0.2, "a")};
  const auto mean = mean_observed(obs, uniform_grid(10.0, 0.1));
  testing::WarningCapture w;
  const auto score =
      evaluate({{"s", obs}, {"t", obs}}, {{"s", {matching_rollout(mean, "s", 0, 1.0)}}});
  EXPECT_EQ(score.scenarios.size(), 1u);
  EXPECT_NEAR(score.speed_rmse, 1.0, 1e-9);
  EXPECT_EQ(w.messages.size(), 1u);
}

TEST(Report, ImprovementAndFormats) {
  EvalReport rep;
  rep.sirl.speed_rmse = 1.5;
  rep.dirl.speed_rmse = 2.0;
  rep.sirl.accel_rmse = 0.6;
  rep.dirl.accel_rmse = 0.5;
  rep.sirl.scenarios = {{"s", 1.5, 0.6, 5, 50}};
  rep.dirl.scenarios = {{"s", 2.0, 0.5, 5, 50}};
  EXPECT_NEAR(rep.speed_improvement(), 25.0, 1e-12);
  EXPECT_NEAR(rep.accel_improvement(), -20.0, 1e-12);
  const auto csv = format_report_csv(rep);
  EXPECT_EQ(csv.substr(0, csv.find('\n')),
            "scenario_id,n_observed,n_sirl,n_dirl,speed_rmse_sirl,accel_rmse_sirl,"
            "speed_rmse_dirl,accel_rmse_dirl");
  EXPECT_NE(csv.find("\ns,5,50,50,"), std::string::npos);
  EXPECT_NE(csv.find("\noverall,"), std::string::npos);
  const auto table = format_report_table(rep);
  EXPECT_NE(table.find("overall"), std::string::npos);
}

TEST(Report, FanCsvLongFormat) {
  std::vector<LeaderFollowerTrace> obs{ramp_trace(10, 0.2, "a")};
  const auto mean = mean_observed(obs, uniform_grid(10.0, 0.1));
  std::vector<RolloutResult> gen{matching_rollout(mean, "s", 3)};
  const auto fan = format_fan_csv(obs, gen);
  EXPECT_EQ(fan.substr(0, fan.find('\n')), "series,t,speed,accel");
  EXPECT_NE(fan.find("observed_mean,"), std::string::npos);
  EXPECT_NE(fan.find("sample_3,"), std::string::npos);
}

}  // namespace
}  // namespace stochdrive
