#pragma once

#include <span>
#include <vector>

#include "stochdrive/trace.hpp"
#include "stochdrive/types.hpp"

namespace stochdrive {

// Leader motion and driver constants over one planning horizon. The leader
// is sampled on the same dt grid as the follower trajectory it is paired
// with; horizon = dt * (samples - 1).
struct FeatureContext {
  std::vector<double> leader_position;
  std::vector<double> leader_velocity;
  double desired_speed = 0.0;  // v_d
  double headway = 1.0;        // tau in d_c = v * tau + d_s
  double safe_gap = 5.0;       // d_s
  double dt = 0.1;

  std::size_t samples() const { return leader_position.size(); }
  double horizon() const;
  void validate() const;
};

struct FollowerSamples {
  std::span<const double> position;
  std::span<const double> velocity;
  std::span<const double> acceleration;
};

// Trapezoidal-rule feature integrals. Entries outside the phase's feature
// set are zero. Throws DomainError on a grid mismatch.
FeatureArray compute_feature_array(const FollowerSamples& follower,
                                   const FeatureContext& ctx,
                                   PhaseLabel phase);
FeatureVector compute_features(const FollowerSamples& follower,
                               const FeatureContext& ctx, PhaseLabel phase);

struct HeadwayOptions {
  double thw_cap = 3600.0;  // THW assigned when the follower is (nearly) stopped
  double v_eps = 0.1;
};

struct HeadwayIndicators {
  double mean_thw = 0.0;
  double mean_ttci = 0.0;
  double mean_gap = 0.0;
  double mean_speed = 0.0;
};

HeadwayIndicators headway_indicators(std::span<const double> gap,
                                     std::span<const double> follower_speed,
                                     std::span<const double> leader_speed,
                                     const HeadwayOptions& opts = {});
HeadwayIndicators headway_indicators(std::span<const TraceSample> window,
                                     const HeadwayOptions& opts = {});

struct HeadwayFallback {
  double fallback = 2.0;  // used when the follower never moves
  double floor = 0.05;    // keeps tau positive when the gap is below d_s
  double v_eps = 0.1;
};

// Average time headway beyond the safety clearance, (d - d_s) / v, over
// samples where the follower moves faster than v_eps. With this tau the
// steady target d_c = v * tau + d_s reproduces the observed gap.
double observed_headway(std::span<const double> gap,
                        std::span<const double> follower_speed,
                        double safe_gap, const HeadwayFallback& fb = {});

// Context for a demonstrated subsegment: v_d is the leader's maximum speed
// and tau the follower's average time headway over the slice.
FeatureContext demonstration_context(std::span<const TraceSample> slice,
                                     double dt, double safe_gap);

// Observed feature values of a demonstrated subsegment (recorded speed and
// acceleration columns, gap from the position columns).
FeatureVector observed_features(std::span<const TraceSample> slice,
                                const FeatureContext& ctx, PhaseLabel phase);

}  // namespace stochdrive
