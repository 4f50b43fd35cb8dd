#include "stochdrive/features.hpp"

#include <algorithm>
#include <cmath>

#include <fmt/format.h>

#include "stochdrive/errors.hpp"

namespace stochdrive {

double FeatureContext::horizon() const {
  return samples() < 2 ? 0.0 : dt * static_cast<double>(samples() - 1);
}

void FeatureContext::validate() const {
  if (leader_position.size() != leader_velocity.size() ||
      leader_position.size() < 2) {
    throw DomainError("feature context needs >= 2 leader samples");
  }
  if (!(desired_speed >= 0.0) || !(headway > 0.0) || !(safe_gap > 0.0) ||
      !(dt > 0.0)) {
    throw DomainError(fmt::format(
        "invalid feature context (v_d={}, tau={}, d_s={}, dt={})",
        desired_speed, headway, safe_gap, dt));
  }
}

FeatureArray compute_feature_array(const FollowerSamples& follower,
                                   const FeatureContext& ctx,
                                   PhaseLabel phase) {
  const std::size_t n = ctx.samples();
  if (follower.position.size() != n || follower.velocity.size() != n ||
      follower.acceleration.size() != n || ctx.leader_velocity.size() != n ||
      n < 2) {
    throw DomainError(fmt::format(
        "feature grid mismatch: follower {}/{}/{} samples, leader {}",
        follower.position.size(), follower.velocity.size(),
        follower.acceleration.size(), n));
  }
  const bool rs = phase != PhaseLabel::FreeMotion;
  const bool cd = phase == PhaseLabel::SteadyFollowing;
  const bool sd = phase == PhaseLabel::UnsteadyFollowing;
  const bool fd = phase == PhaseLabel::FreeMotion;

  FeatureArray sum{};
  for (std::size_t k = 0; k < n; ++k) {
    const double w = (k == 0 || k + 1 == n) ? 0.5 : 1.0;
    const double v = follower.velocity[k];
    const double a = follower.acceleration[k];
    const double gap = ctx.leader_position[k] - follower.position[k];
    const double dv_des = ctx.desired_speed - v;
    sum[0] += w * a * a;
    sum[1] += w * dv_des * dv_des;
    if (rs) {
      const double dv = ctx.leader_velocity[k] - v;
      sum[2] += w * dv * dv;
    }
    if (cd) {
      const double e = gap - (v * ctx.headway + ctx.safe_gap);
      sum[3] += w * e * e;
    }
    if (sd) {
      const double e = gap - ctx.safe_gap;
      sum[4] += w * e * e;
    }
    if (fd) sum[5] += w * std::exp(-gap);
  }
  for (auto& s : sum) s *= ctx.dt;
  return sum;
}

FeatureVector compute_features(const FollowerSamples& follower,
                               const FeatureContext& ctx, PhaseLabel phase) {
  return PhaseVector::from_array(phase,
                                 compute_feature_array(follower, ctx, phase));
}

HeadwayIndicators headway_indicators(std::span<const double> gap,
                                     std::span<const double> follower_speed,
                                     std::span<const double> leader_speed,
                                     const HeadwayOptions& opts) {
  const std::size_t n = gap.size();
  if (n == 0 || follower_speed.size() != n || leader_speed.size() != n) {
    throw DomainError("headway indicators need matching nonempty series");
  }
  HeadwayIndicators out;
  for (std::size_t k = 0; k < n; ++k) {
    const double d = gap[k];
    const double vh = follower_speed[k];
    out.mean_thw += vh < opts.v_eps ? opts.thw_cap : d / vh;
    out.mean_ttci += (vh - leader_speed[k]) / d;
    out.mean_gap += d;
    out.mean_speed += vh;
  }
  const double inv = 1.0 / static_cast<double>(n);
  out.mean_thw *= inv;
  out.mean_ttci *= inv;
  out.mean_gap *= inv;
  out.mean_speed *= inv;
  return out;
}

HeadwayIndicators headway_indicators(std::span<const TraceSample> window,
                                     const HeadwayOptions& opts) {
  std::vector<double> gap, vf, vl;
  gap.reserve(window.size());
  vf.reserve(window.size());
  vl.reserve(window.size());
  for (const auto& s : window) {
    gap.push_back(s.gap());
    vf.push_back(s.v_f);
    vl.push_back(s.v_l);
  }
  return headway_indicators(gap, vf, vl, opts);
}

double observed_headway(std::span<const double> gap,
                        std::span<const double> follower_speed,
                        double safe_gap, const HeadwayFallback& fb) {
  double sum = 0.0;
  std::size_t count = 0;
  for (std::size_t k = 0; k < gap.size(); ++k) {
    if (follower_speed[k] >= fb.v_eps) {
      sum += (gap[k] - safe_gap) / follower_speed[k];
      ++count;
    }
  }
  if (count == 0) return fb.fallback;
  return std::max(sum / static_cast<double>(count), fb.floor);
}

FeatureContext demonstration_context(std::span<const TraceSample> slice,
                                     double dt, double safe_gap) {
  FeatureContext ctx;
  ctx.dt = dt;
  ctx.safe_gap = safe_gap;
  std::vector<double> gap, vf;
  for (const auto& s : slice) {
    ctx.leader_position.push_back(s.s_l);
    ctx.leader_velocity.push_back(s.v_l);
    ctx.desired_speed = std::max(ctx.desired_speed, s.v_l);
    gap.push_back(s.gap());
    vf.push_back(s.v_f);
  }
  ctx.headway = observed_headway(gap, vf, safe_gap);
  return ctx;
}

FeatureVector observed_features(std::span<const TraceSample> slice,
                                const FeatureContext& ctx, PhaseLabel phase) {
  std::vector<double> p, v, a;
  p.reserve(slice.size());
  v.reserve(slice.size());
  a.reserve(slice.size());
  for (const auto& s : slice) {
    p.push_back(s.s_f);
    v.push_back(s.v_f);
    a.push_back(s.a_f);
  }
  return compute_features({p, v, a}, ctx, phase);
}

}  // namespace stochdrive
