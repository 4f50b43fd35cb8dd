#include <cmath>
#include <random>
#include <vector>

#include <gtest/gtest.h>

#include "stochdrive/errors.hpp"
#include "stochdrive/quintic.hpp"

namespace stochdrive {
namespace {

// Power-sum oracle written independently of the Horner form.
KinematicState naive_eval(const std::array<double, 6>& c, double t) {
  KinematicState s;
  for (int j = 0; j < 6; ++j) {
    const int p = 5 - j;
    s.position += c[j] * std::pow(t, p);
    if (p >= 1) s.velocity += c[j] * p * std::pow(t, p - 1);
    if (p >= 2) s.acceleration += c[j] * p * (p - 1) * std::pow(t, p - 2);
  }
  return s;
}

TEST(Quintic, LinearAndQuadraticExamples) {
  auto s = eval({{0, 0, 0, 0, 1, 2}, 5.0}, 3.0);
  EXPECT_DOUBLE_EQ(s.position, 5);
  EXPECT_DOUBLE_EQ(s.velocity, 1);
  EXPECT_DOUBLE_EQ(s.acceleration, 0);
  s = eval({{0, 0, 0, 0.5, 0, 0}, 2.0}, 2.0);
  EXPECT_DOUBLE_EQ(s.position, 2);
  EXPECT_DOUBLE_EQ(s.velocity, 2);
  EXPECT_DOUBLE_EQ(s.acceleration, 1);
}

TEST(Quintic, AllOnesAtUnitTime) {
  // d/dt = 5+4+3+2+1, d2/dt2 = 20+12+6+2.
  const auto s = eval({{1, 1, 1, 1, 1, 1}, 1.0}, 1.0);
  EXPECT_DOUBLE_EQ(s.position, 6);
  EXPECT_DOUBLE_EQ(s.velocity, 15);
  EXPECT_DOUBLE_EQ(s.acceleration, 40);
  const auto o = naive_eval({1, 1, 1, 1, 1, 1}, 1.0);
  EXPECT_DOUBLE_EQ(s.acceleration, o.acceleration);
}

TEST(Quintic, MatchesPowerSumOracle) {
  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> u(-3, 3);
  for (int trial = 0; trial < 200; ++trial) {
    QuinticSegment seg;
    for (auto& c : seg.coeffs) c = u(rng);
    seg.duration = 2.5;
    const double t = std::abs(u(rng)) / 3.0 * seg.duration;
    const auto a = eval(seg, t);
    const auto b = naive_eval(seg.coeffs, t);
    EXPECT_NEAR(a.position, b.position, 1e-10 * (1 + std::abs(b.position)));
    EXPECT_NEAR(a.velocity, b.velocity, 1e-10 * (1 + std::abs(b.velocity)));
    EXPECT_NEAR(a.acceleration, b.acceleration,
                1e-10 * (1 + std::abs(b.acceleration)));
  }
}

TEST(Quintic, OutOfRangeTauIsDomainError) {
  const QuinticSegment seg{{0, 0, 0, 0, 1, 0}, 1.0};
  EXPECT_THROW(eval(seg, -0.01), DomainError);
  EXPECT_THROW(eval(seg, 1.01), DomainError);
  EXPECT_NO_THROW(eval(seg, 1.0));
  EXPECT_NO_THROW(eval(seg, 0.0));
}

TEST(Quintic, FromInitialStateExamples) {
  auto seg = from_initial_state({10, 5, 2}, {0, 0, 0}, 1.0);
  const std::array<double, 6> want{0, 0, 0, 1, 5, 10};
  EXPECT_EQ(seg.coeffs, want);
  auto s = eval(seg, 0.0);
  EXPECT_EQ(s.position, 10);
  EXPECT_EQ(s.velocity, 5);
  EXPECT_EQ(s.acceleration, 2);

  EXPECT_DOUBLE_EQ(eval(from_initial_state({0, 0, 0}, {1, 0, 0}, 1.0), 1.0).position,
                   1.0);

  const double p0 = 3, v0 = -1.5, a0 = 0.7;
  seg = from_initial_state({p0, v0, a0}, {0, 0, 1}, 2.0);
  EXPECT_NEAR(eval(seg, 2.0).position, p0 + 2 * v0 + 2 * a0 + 8, 1e-12);
  EXPECT_THROW(from_initial_state({0, 0, 0}, {0, 0, 0}, 0.0), DomainError);
}

TEST(Quintic, InitialStateIdentityProperty) {
  std::mt19937_64 rng(9);
  std::uniform_real_distribution<double> u(-50, 50);
  for (int i = 0; i < 500; ++i) {
    const KinematicState init{u(rng), u(rng), u(rng)};
    const auto seg = from_initial_state(init, {u(rng), u(rng), u(rng)}, 1.0);
    const auto s = eval(seg, 0.0);
    EXPECT_EQ(s.position, init.position);
    EXPECT_EQ(s.velocity, init.velocity);
    EXPECT_EQ(s.acceleration, init.acceleration);
  }
}

TEST(Quintic, DerivativeConsistencyProperty) {
  std::mt19937_64 rng(17);
  std::uniform_real_distribution<double> u(-2, 2);
  const double h = 1e-6;
  for (int i = 0; i < 200; ++i) {
    QuinticSegment seg;
    for (auto& c : seg.coeffs) c = u(rng);
    seg.duration = 1.0;
    const double t = 0.5 * (u(rng) + 2) / 2.0;  // in [0, 0.5]
    const auto s0 = eval(seg, t);
    const auto s1 = eval(seg, t + h);
    const double fd_v = (s1.position - s0.position) / h;
    const double fd_a = (s1.velocity - s0.velocity) / h;
    EXPECT_NEAR(fd_v, s0.velocity, 1e-4 * std::max(1.0, std::abs(s0.velocity)));
    EXPECT_NEAR(fd_a, s0.acceleration,
                1e-4 * std::max(1.0, std::abs(s0.acceleration)));
  }
}

std::vector<TimedPosition> sample(const QuinticSegment& seg, int n) {
  std::vector<TimedPosition> out;
  for (int i = 0; i < n; ++i) {
    const double t = seg.duration * i / (n - 1);
    out.push_back({t, eval(seg, t).position});
  }
  return out;
}

TEST(Quintic, FitRecoversCubicAndConstant) {
  const auto cubic = fit_slice(sample({{0, 0, 1, 0, 0, 0}, 1.0}, 11), 1.0);
  const std::array<double, 6> want{0, 0, 1, 0, 0, 0};
  for (int j = 0; j < 6; ++j) EXPECT_NEAR(cubic.segment.coeffs[j], want[j], 1e-9);
  EXPECT_LT(cubic.residual_rms, 1e-12);

  const auto flat = fit_slice(sample({{0, 0, 0, 0, 0, 7}, 1.0}, 11), 1.0);
  for (int j = 0; j < 5; ++j) EXPECT_NEAR(flat.segment.coeffs[j], 0.0, 1e-9);
  EXPECT_NEAR(flat.segment.coeffs[5], 7.0, 1e-9);
}

TEST(Quintic, FitRecoversArbitraryQuinticProperty) {
  std::mt19937_64 rng(23);
  std::uniform_real_distribution<double> u(-5, 5);
  for (int i = 0; i < 100; ++i) {
    QuinticSegment seg;
    for (auto& c : seg.coeffs) c = u(rng);
    seg.duration = 1.0;
    const auto fit = fit_slice(sample(seg, 11), 1.0);
    for (int j = 0; j < 6; ++j) {
      EXPECT_NEAR(fit.segment.coeffs[j], seg.coeffs[j], 1e-8);
    }
  }
}

TEST(Quintic, NoisyCubicResidualWithinThreeSigma) {
  std::mt19937_64 rng(5);
  const double sigma = 0.01;
  std::normal_distribution<double> noise(0.0, sigma);
  std::vector<TimedPosition> pts;
  for (int i = 0; i <= 30; ++i) {
    const double t = i / 10.0;
    pts.push_back({t, t * t * t + noise(rng)});
  }
  const auto fit = fit_slice(pts, 3.0);
  EXPECT_LE(fit.residual_rms, 3 * sigma);
  EXPECT_NEAR(fit.segment.coeffs[2], 1.0, 0.1);
}

TEST(Quintic, FewerThanSixDistinctTimesIsFitError) {
  std::vector<TimedPosition> pts;
  for (int i = 0; i < 10; ++i) pts.push_back({0.2 * (i % 5), 1.0});
  EXPECT_THROW(fit_slice(pts, 1.0), FitError);
}

}  // namespace
}  // namespace stochdrive
