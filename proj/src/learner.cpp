#include "stochdrive/learner.hpp"

#include <cmath>

#include <fmt/format.h>

#include "stochdrive/errors.hpp"
#include "stochdrive/logging.hpp"

namespace stochdrive {

SampledTrajectory sample_quintic(const QuinticSegment& seg, double dt,
                                 std::size_t samples) {
  SampledTrajectory out;
  out.position.resize(samples);
  out.velocity.resize(samples);
  out.acceleration.resize(samples);
  for (std::size_t k = 0; k < samples; ++k) {
    const auto s = eval(seg, static_cast<double>(k) * dt);
    out.position[k] = s.position;
    out.velocity[k] = s.velocity;
    out.acceleration[k] = s.acceleration;
  }
  return out;
}

namespace {

// theta^T f as a function of the free coefficients, with the pinned part
// and the monomial basis tabulated once per subsegment.
class SubsegmentCost {
 public:
  SubsegmentCost(const KinematicState& initial, const WeightVector& theta,
                 const FeatureContext& ctx)
      : ctx_(ctx), phase_(theta.phase()), weights_(theta.weights.to_array()) {
    const std::size_t n = ctx.samples();
    rows_.resize(n);
    for (std::size_t k = 0; k < n; ++k) {
      const double t = static_cast<double>(k) * ctx.dt;
      const double t2 = t * t, t3 = t2 * t, t4 = t3 * t, t5 = t4 * t;
      auto& r = rows_[k];
      r.weight = (k == 0 || k + 1 == n) ? 0.5 : 1.0;
      r.p0 = initial.position + initial.velocity * t +
             0.5 * initial.acceleration * t2;
      r.v0 = initial.velocity + initial.acceleration * t;
      r.a0 = initial.acceleration;
      r.p = {t5, t4, t3};
      r.v = {5.0 * t4, 4.0 * t3, 3.0 * t2};
      r.a = {20.0 * t3, 12.0 * t2, 6.0 * t};
    }
  }

  double operator()(const Eigen::Vector3d& x) const {
    const bool rs = phase_ != PhaseLabel::FreeMotion;
    const bool cd = phase_ == PhaseLabel::SteadyFollowing;
    const bool sd = phase_ == PhaseLabel::UnsteadyFollowing;
    const bool fd = phase_ == PhaseLabel::FreeMotion;
    FeatureArray sum{};
    for (std::size_t k = 0; k < rows_.size(); ++k) {
      const auto& r = rows_[k];
      const double p = r.p0 + r.p[0] * x(0) + r.p[1] * x(1) + r.p[2] * x(2);
      const double v = r.v0 + r.v[0] * x(0) + r.v[1] * x(1) + r.v[2] * x(2);
      const double a = r.a0 + r.a[0] * x(0) + r.a[1] * x(1) + r.a[2] * x(2);
      const double gap = ctx_.leader_position[k] - p;
      const double w = r.weight;
      const double dv_des = ctx_.desired_speed - v;
      sum[0] += w * a * a;
      sum[1] += w * dv_des * dv_des;
      if (rs) {
        const double dv = ctx_.leader_velocity[k] - v;
        sum[2] += w * dv * dv;
      }
      if (cd) {
        const double e = gap - (v * ctx_.headway + ctx_.safe_gap);
        sum[3] += w * e * e;
      }
      if (sd) {
        const double e = gap - ctx_.safe_gap;
        sum[4] += w * e * e;
      }
      if (fd) sum[5] += w * std::exp(-gap);
    }
    double cost = 0.0;
    for (std::size_t i = 0; i < kNumFeatures; ++i) cost += weights_[i] * sum[i];
    return cost * ctx_.dt;
  }

 private:
  struct Row {
    double weight, p0, v0, a0;
    std::array<double, 3> p, v, a;
  };
  const FeatureContext& ctx_;
  PhaseLabel phase_;
  FeatureArray weights_;
  std::vector<Row> rows_;
};

bool all_finite(const FeatureArray& a) {
  for (double v : a) {
    if (!std::isfinite(v)) return false;
  }
  return true;
}

}  // namespace

double subsegment_cost(const KinematicState& initial,
                       const std::array<double, 3>& free,
                       const WeightVector& theta, const FeatureContext& ctx) {
  const SubsegmentCost cost(initial, theta, ctx);
  return cost(Eigen::Vector3d(free[0], free[1], free[2]));
}

SubsegmentOptimum optimize_subsegment(const KinematicState& initial,
                                      const WeightVector& theta,
                                      const FeatureContext& ctx,
                                      const BfgsOptions& opts) {
  ctx.validate();
  if (theta.weights.size() != feature_set(theta.phase()).size()) {
    throw DomainError("weight vector does not match its phase feature set");
  }
  const SubsegmentCost cost(initial, theta, ctx);
  const auto res =
      minimize_bfgs<3>(cost, Eigen::Vector3d::Zero().eval(), opts);
  SubsegmentOptimum out;
  out.segment = from_initial_state(initial, {res.x(0), res.x(1), res.x(2)},
                                   ctx.horizon());
  out.cost = res.value;
  out.start_cost = res.start_value;
  out.gradient_norm = res.gradient_norm;
  out.iterations = res.iterations;
  return out;
}

std::vector<DemoSubsegment> prepare_demonstrations(
    const TrajectorySegment& segment, const PipelineConfig& cfg) {
  if (!segment.phase) {
    throw DomainError(fmt::format("segment {} of '{}' is not classified",
                                  segment.segment_index, segment.trace->id));
  }
  std::vector<DemoSubsegment> demos;
  demos.reserve(static_cast<std::size_t>(segment.num_subsegments));
  const double dt = segment.trace->dt();
  for (int k = 0; k < segment.num_subsegments; ++k) {
    const auto slice = segment.subsegment(k);
    DemoSubsegment d;
    d.initial = {slice.front().s_f, slice.front().v_f, slice.front().a_f};
    d.ctx = demonstration_context(slice, dt, cfg.safe_gap);
    d.observed =
        observed_features(slice, d.ctx, *segment.phase).to_array();
    demos.push_back(std::move(d));
  }
  return demos;
}

void ngd_step(std::span<double> theta, std::span<const double> grad,
              double eta) {
  if (theta.size() != grad.size()) {
    throw DomainError("weight and gradient sizes differ");
  }
  double norm2 = 0.0;
  for (double g : grad) norm2 += g * g;
  if (!(norm2 > 0.0)) return;
  const double norm = std::sqrt(norm2);
  for (std::size_t j = 0; j < theta.size(); ++j) theta[j] -= eta * grad[j] / norm;
}

LearnResult learn_weights(std::span<const DemoSubsegment> demos,
                          PhaseLabel phase, const PipelineConfig& cfg,
                          Execution exec, const BfgsOptions& inner) {
  if (demos.empty()) throw DomainError("no demonstrations to learn from");
  const auto set = feature_set(phase);
  const std::size_t dim = set.size();
  const double inv_n = 1.0 / static_cast<double>(demos.size());

  FeatureArray observed{};
  for (const auto& d : demos) {
    for (std::size_t i = 0; i < kNumFeatures; ++i) observed[i] += d.observed[i];
  }
  for (auto& v : observed) v *= inv_n;
  if (!all_finite(observed)) {
    throw OptimizationError("non-finite demonstrated features");
  }

  LearnResult res;
  res.theta = WeightVector::ones(phase);
  res.observed = PhaseVector::from_array(phase, observed);
  std::vector<FeatureArray> per_demo(demos.size());
  std::vector<double> grad(dim);

  for (int epoch = 1; epoch <= cfg.max_epochs; ++epoch) {
    const double eta = cfg.learning_rate(epoch);
    try {
      for_each_index(demos.size(), exec, [&](std::size_t i) {
        const auto& d = demos[i];
        const auto opt = optimize_subsegment(d.initial, res.theta, d.ctx, inner);
        const auto traj = sample_quintic(opt.segment, d.ctx.dt, d.ctx.samples());
        per_demo[i] = compute_feature_array(traj.view(), d.ctx, phase);
        if (!all_finite(per_demo[i])) {
          throw OptimizationError("non-finite optimized features");
        }
      });
    } catch (const OptimizationError&) {
      if (res.trace.empty()) throw;
      // The last step made the cost unbounded; keep the last weights that
      // still had a minimizer.
      res.theta.weights.values = res.trace.back().weights;
      res.ill_posed = true;
      break;
    }
    FeatureArray expected{};
    for (const auto& f : per_demo) {
      for (std::size_t i = 0; i < kNumFeatures; ++i) expected[i] += f[i];
    }
    for (auto& v : expected) v *= inv_n;

    double norm2 = 0.0;
    for (std::size_t j = 0; j < dim; ++j) {
      const auto idx = static_cast<std::size_t>(set[j]);
      grad[j] = observed[idx] - expected[idx];
      norm2 += grad[j] * grad[j];
    }
    const double norm = std::sqrt(norm2);
    res.trace.push_back({epoch, norm, res.theta.weights.values, eta});
    res.final_grad_norm = norm;
    res.expected = PhaseVector::from_array(phase, expected);
    if (norm < cfg.grad_norm_tol) {
      res.converged = true;
      break;
    }
    ngd_step(res.theta.weights.values, grad, eta);
  }
  return res;
}

LearnResult learn_segment(const TrajectorySegment& segment,
                          const PipelineConfig& cfg) {
  const auto demos = prepare_demonstrations(segment, cfg);
  auto res = learn_weights(demos, *segment.phase, cfg, Execution::Serial);
  res.theta.segment_index = segment.segment_index;
  return res;
}

std::vector<WeightVector> LearnedWeights::cluster(PhaseLabel phase) const {
  std::vector<WeightVector> out;
  for (const auto& s : segments) {
    if (s.phase == phase && s.result) out.push_back(s.result->theta);
  }
  return out;
}

LearnedWeights learn_all(const std::vector<TrajectorySegment>& segments,
                         const PipelineConfig& cfg, Execution exec) {
  if (segments.empty()) throw DomainError("no segments to learn from");
  LearnedWeights out;
  out.segments.resize(segments.size());
  for_each_index(segments.size(), exec, [&](std::size_t i) {
    const auto& seg = segments[i];
    auto& o = out.segments[i];
    o.global_index = static_cast<long>(i);
    o.trace_id = seg.trace->id;
    o.segment_index = seg.segment_index;
    if (!seg.phase) {
      o.error = "segment is not classified";
      return;
    }
    o.phase = *seg.phase;
    try {
      o.result = learn_segment(seg, cfg);
      o.result->theta.segment_index = o.global_index;
    } catch (const Error& e) {
      o.error = e.what();
    }
  });
  for (const auto& o : out.segments) {
    if (!o.error.empty()) {
      warn(fmt::format("segment {} ({} #{}) skipped: {}", o.global_index,
                       o.trace_id, o.segment_index, o.error));
    }
  }
  for (auto phase : kAllPhases) {
    const auto n = out.cluster(phase).size();
    if (n < 2) {
      warn(fmt::format("{} cluster has {} learned segment(s); copula fitting "
                       "will fail for it",
                       to_string(phase), n));
    }
  }
  return out;
}

std::map<PhaseLabel, LearnResult> learn_dirl(
    const std::vector<TrajectorySegment>& segments, const PipelineConfig& cfg,
    Execution exec) {
  if (segments.empty()) throw DomainError("no segments to learn from");
  std::map<PhaseLabel, LearnResult> out;
  for (auto phase : kAllPhases) {
    std::vector<DemoSubsegment> pooled;
    for (const auto& seg : segments) {
      if (seg.phase != phase) continue;
      auto demos = prepare_demonstrations(seg, cfg);
      std::move(demos.begin(), demos.end(), std::back_inserter(pooled));
    }
    if (pooled.empty()) {
      warn(fmt::format("{} cluster is empty; no baseline weights learned",
                       to_string(phase)));
      continue;
    }
    try {
      out.emplace(phase, learn_weights(pooled, phase, cfg, exec));
    } catch (const OptimizationError& e) {
      warn(fmt::format("{} baseline skipped: {}", to_string(phase), e.what()));
    }
  }
  return out;
}

}  // namespace stochdrive
