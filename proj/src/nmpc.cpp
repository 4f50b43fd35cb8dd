#include "stochdrive/nmpc.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

#include <fmt/format.h>

#include "stochdrive/errors.hpp"
#include "stochdrive/kv_file.hpp"
#include "stochdrive/phase.hpp"

namespace stochdrive {

RolloutState step_dynamics(const RolloutState& s, double accel, double ts,
                           double v_pv_next) {
  RolloutState next;
  next.t = s.t + ts;
  next.d = (s.v_pv - s.v_h) * ts + s.d;
  next.v_h = s.v_h + accel * ts;
  next.v_pv = v_pv_next;
  next.s_h = s.s_h + s.v_h * ts;
  return next;
}

namespace {

// Fixed part of one planning problem; evaluates candidates without
// reallocating.
class HorizonProblem {
 public:
  HorizonProblem(const RolloutState& state, const WeightVector& theta,
                 std::span<const double> preview, const PipelineConfig& cfg,
                 const SpeedBounds& bounds)
      : state_(state),
        phase_(theta.phase()),
        weights_(theta.weights.to_array()),
        bounds_(bounds),
        safe_gap_(cfg.safe_gap) {
    const auto n = static_cast<std::size_t>(cfg.steps_per_subsegment());
    if (preview.size() < n + 1) {
      throw DomainError(fmt::format(
          "leader preview has {} samples, the horizon needs {}",
          preview.size(), n + 1));
    }
    if (theta.weights.size() != feature_set(phase_).size()) {
      throw DomainError("weight vector does not match its phase feature set");
    }
    preview_ = preview.first(n + 1);
    ctx_.dt = cfg.sample_time;
    ctx_.safe_gap = cfg.safe_gap;
    ctx_.leader_velocity.assign(preview_.begin(), preview_.end());
    ctx_.leader_position.resize(n + 1);
    ctx_.leader_position[0] = state.d;
    for (std::size_t k = 1; k <= n; ++k) {
      ctx_.leader_position[k] =
          ctx_.leader_position[k - 1] + preview_[k - 1] * cfg.sample_time;
    }
    ctx_.desired_speed =
        *std::max_element(preview_.begin(), preview_.end());

    position_.resize(n + 1);
    velocity_.resize(n + 1);
    accel_.resize(n + 1);
    // tau from the coasting prediction over the horizon.
    simulate(0.0);
    std::vector<double> gap(n + 1);
    for (std::size_t k = 0; k <= n; ++k) {
      gap[k] = ctx_.leader_position[k] - position_[k];
    }
    ctx_.headway = observed_headway(gap, velocity_, cfg.safe_gap);
  }

  HorizonEvaluation operator()(double a) {
    simulate(a);
    HorizonEvaluation out;
    const auto f = compute_feature_array({position_, velocity_, accel_}, ctx_,
                                         phase_);
    for (std::size_t i = 0; i < kNumFeatures; ++i) {
      out.cost += weights_[i] * f[i];
    }
    for (std::size_t k = 1; k < position_.size(); ++k) {
      const double gap = ctx_.leader_position[k] - position_[k];
      const double v = velocity_[k];
      const double g = std::max(0.0, safe_gap_ - gap);
      const double lo = std::max(0.0, bounds_.v_min - v);
      const double hi = std::max(0.0, v - bounds_.v_max);
      out.violation += g * g + lo * lo + hi * hi;
    }
    return out;
  }

 private:
  // Same recurrence as step_dynamics, written on positions.
  void simulate(double a) {
    const double ts = ctx_.dt;
    position_[0] = 0.0;
    velocity_[0] = state_.v_h;
    for (std::size_t k = 1; k < position_.size(); ++k) {
      position_[k] = position_[k - 1] + velocity_[k - 1] * ts;
      velocity_[k] = velocity_[k - 1] + a * ts;
    }
    std::fill(accel_.begin(), accel_.end(), a);
  }

  RolloutState state_;
  PhaseLabel phase_;
  FeatureArray weights_;
  SpeedBounds bounds_;
  double safe_gap_;
  std::span<const double> preview_;
  FeatureContext ctx_;
  std::vector<double> position_, velocity_, accel_;
};

}  // namespace

HorizonEvaluation evaluate_horizon(const RolloutState& state, double accel,
                                   const WeightVector& theta,
                                   std::span<const double> leader_preview,
                                   const PipelineConfig& cfg,
                                   const SpeedBounds& bounds) {
  HorizonProblem problem(state, theta, leader_preview, cfg, bounds);
  return problem(accel);
}

std::vector<double> acceleration_grid(const PipelineConfig& cfg) {
  constexpr int kPoints = 41;
  std::vector<double> g(kPoints);
  for (int i = 0; i < kPoints; ++i) {
    g[static_cast<std::size_t>(i)] =
        cfg.accel_min + (cfg.accel_max - cfg.accel_min) * i / (kPoints - 1);
  }
  return g;
}

PlanResult plan_step(const RolloutState& state, const WeightVector& theta,
                     std::span<const double> leader_preview,
                     const PipelineConfig& cfg, const SpeedBounds& bounds) {
  HorizonProblem problem(state, theta, leader_preview, cfg, bounds);
  const auto grid = acceleration_grid(cfg);

  std::size_t best = grid.size();
  double best_cost = std::numeric_limits<double>::infinity();
  std::vector<bool> feasible(grid.size());
  for (std::size_t i = 0; i < grid.size(); ++i) {
    const auto e = problem(grid[i]);
    feasible[i] = e.violation == 0.0;
    if (feasible[i] && e.cost < best_cost) {
      best_cost = e.cost;
      best = i;
    }
  }
  if (best == grid.size()) return {cfg.accel_min, false, problem(cfg.accel_min).cost};

  // Feasibility is monotone in a along each side, so the feasible part of
  // the neighbouring bracket is an interval found by bisection.
  auto feasible_edge = [&](double inside, double outside) {
    for (int it = 0; it < 50; ++it) {
      const double mid = 0.5 * (inside + outside);
      if (problem(mid).violation == 0.0) {
        inside = mid;
      } else {
        outside = mid;
      }
    }
    return inside;
  };
  const double center = grid[best];
  double lo = best > 0 ? grid[best - 1] : center;
  double hi = best + 1 < grid.size() ? grid[best + 1] : center;
  if (best > 0 && !feasible[best - 1]) lo = feasible_edge(center, lo);
  if (best + 1 < grid.size() && !feasible[best + 1]) hi = feasible_edge(center, hi);

  // Golden-section search on the (convex for nonnegative weights) cost.
  const double inv_phi = (std::sqrt(5.0) - 1.0) / 2.0;
  double a = lo, b = hi;
  double x1 = b - inv_phi * (b - a);
  double x2 = a + inv_phi * (b - a);
  double f1 = problem(x1).penalized();
  double f2 = problem(x2).penalized();
  for (int it = 0; it < 60 && b - a > 1e-9; ++it) {
    if (f1 <= f2) {
      b = x2;
      x2 = x1;
      f2 = f1;
      x1 = b - inv_phi * (b - a);
      f1 = problem(x1).penalized();
    } else {
      a = x1;
      x1 = x2;
      f1 = f2;
      x2 = a + inv_phi * (b - a);
      f2 = problem(x2).penalized();
    }
  }
  const double refined = 0.5 * (a + b);
  const auto e = problem(refined);
  if (e.violation == 0.0 && e.cost <= best_cost) {
    return {refined, true, e.cost};
  }
  return {center, true, best_cost};
}

WeightVector draw_weights(const WeightSource& source, PhaseLabel phase,
                          std::mt19937_64& rng) {
  std::array<PhaseLabel, 3> order{};
  switch (phase) {
    case PhaseLabel::SteadyFollowing:
      order = {PhaseLabel::SteadyFollowing, PhaseLabel::UnsteadyFollowing,
               PhaseLabel::FreeMotion};
      break;
    case PhaseLabel::UnsteadyFollowing:
      order = {PhaseLabel::UnsteadyFollowing, PhaseLabel::SteadyFollowing,
               PhaseLabel::FreeMotion};
      break;
    case PhaseLabel::FreeMotion:
      order = {PhaseLabel::FreeMotion, PhaseLabel::SteadyFollowing,
               PhaseLabel::UnsteadyFollowing};
      break;
  }
  for (auto p : order) {
    if (const auto* set = std::get_if<CopulaSet>(&source)) {
      if (auto it = set->models.find(p); it != set->models.end()) {
        return sample_weight(it->second, rng);
      }
      if (auto it = set->fallback.find(p); it != set->fallback.end()) {
        return it->second;
      }
    } else {
      const auto& fixed = std::get<FixedWeights>(source);
      if (auto it = fixed.weights.find(p); it != fixed.weights.end()) {
        return it->second;
      }
    }
  }
  throw GenerationError("weight source has no model for any phase");
}

SpeedBounds speed_bounds(const ScenarioSpec& scenario,
                         const PipelineConfig& cfg) {
  SpeedBounds b;
  b.v_min = cfg.v_min;
  b.v_max = cfg.v_max.kind == SpeedLimitPolicy::Kind::FixedValue
                ? cfg.v_max.value
                : scenario.max_leader_speed();
  return b;
}

PhaseLabel preview_phase(const RolloutState& state,
                         std::span<const double> leader_speed, double ts) {
  std::vector<double> gap, vf, vl;
  RolloutState s = state;
  for (std::size_t k = 0; k < leader_speed.size(); ++k) {
    gap.push_back(s.d);
    vf.push_back(s.v_h);
    vl.push_back(s.v_pv);
    if (k + 1 < leader_speed.size()) {
      s = step_dynamics(s, 0.0, ts, leader_speed[k + 1]);
    }
  }
  return classify_segment(headway_indicators(gap, vf, vl));
}

RolloutResult rollout(const ScenarioSpec& scenario, const WeightSource& source,
                      const PipelineConfig& cfg, std::uint64_t seed,
                      long sample_id) {
  scenario.validate(cfg.safe_gap);
  const double ts = cfg.sample_time;
  const auto steps =
      static_cast<std::size_t>(std::llround(scenario.duration / ts));
  const auto seg_steps = static_cast<std::size_t>(cfg.steps_per_segment());
  if (steps < seg_steps) {
    throw ValidationError(fmt::format(
        "scenario {} lasts {} s, shorter than segment_len_TH",
        scenario.scenario_id, scenario.duration));
  }
  const auto horizon = static_cast<std::size_t>(cfg.steps_per_subsegment());
  const LeaderSeries leader =
      simulate_leader(scenario, ts, steps + std::max(horizon, seg_steps), 0.0);
  const SpeedBounds bounds = speed_bounds(scenario, cfg);
  std::mt19937_64 rng(derive_seed(seed, scenario.scenario_id,
                                  static_cast<std::uint64_t>(sample_id)));

  RolloutResult out;
  out.scenario_id = scenario.scenario_id;
  out.sample_id = sample_id;
  out.states.reserve(steps + 1);
  RolloutState state{0.0, scenario.initial_gap,
                     scenario.initial_follower_speed, leader.velocity[0], 0.0};
  const std::span<const double> lv(leader.velocity);
  WeightVector theta;
  for (std::size_t k = 0; k <= steps; ++k) {
    state.t = static_cast<double>(k) * ts;
    out.states.push_back(state);
    if (k < steps && k % seg_steps == 0) {
      const auto phase = preview_phase(state, lv.subspan(k, seg_steps + 1), ts);
      theta = draw_weights(source, phase, rng);
      theta.segment_index = static_cast<long>(out.theta_schedule.size());
      out.theta_schedule.push_back(theta);
    }
    out.theta_segment.push_back(theta.segment_index);
    if (k == steps) break;
    const auto plan =
        plan_step(state, theta, lv.subspan(k, horizon + 1), cfg, bounds);
    double applied = plan.accel;
    if (!plan.feasible) {
      ++out.forced_steps;
      applied = std::max(applied, (bounds.v_min - state.v_h) / ts);
    }
    out.accel.push_back(applied);
    state = step_dynamics(state, applied, ts, leader.velocity[k + 1]);
  }
  out.accel.push_back(out.accel.empty() ? 0.0 : out.accel.back());
  return out;
}

std::vector<RolloutResult> rollout_batch(const ScenarioSpec& scenario,
                                         const WeightSource& source,
                                         const PipelineConfig& cfg,
                                         std::uint64_t seed, std::size_t n,
                                         Execution exec) {
  std::vector<RolloutResult> out(n);
  for_each_index(n, exec, [&](std::size_t i) {
    out[i] = rollout(scenario, source, cfg, seed, static_cast<long>(i));
  });
  return out;
}

std::string format_rollout(const RolloutResult& r) {
  std::string out = fmt::format(
      "# stochdrive-rollout 1 scenario={} sample={} forced_steps={}\n",
      r.scenario_id, r.sample_id, r.forced_steps);
  out += kRolloutHeader;
  out += '\n';
  for (std::size_t k = 0; k < r.states.size(); ++k) {
    const auto& s = r.states[k];
    out += fmt::format("{},{},{},{},{},{},{}\n", r.sample_id, s.t, s.d, s.v_h,
                       s.v_pv, r.accel[k], r.theta_segment[k]);
  }
  return out;
}

RolloutResult parse_rollout(std::string_view csv) {
  std::istringstream in{std::string(csv)};
  std::string line;
  RolloutResult r;
  if (!std::getline(in, line) || !line.starts_with("# stochdrive-rollout 1")) {
    throw IngestionError("rollout CSV: missing version line");
  }
  {
    std::istringstream meta(line.substr(2));
    std::string tok;
    while (meta >> tok) {
      const auto eq = tok.find('=');
      if (eq == std::string::npos) continue;
      const auto key = tok.substr(0, eq);
      const auto val = tok.substr(eq + 1);
      if (key == "scenario") r.scenario_id = val;
      else if (key == "forced_steps") r.forced_steps = static_cast<int>(parse_int(val, key));
    }
  }
  if (!std::getline(in, line) || trim(line) != kRolloutHeader) {
    throw IngestionError("rollout CSV: bad header");
  }
  std::size_t row = 0;
  while (std::getline(in, line)) {
    if (trim(line).empty()) continue;
    ++row;
    std::array<std::string_view, 7> cells{};
    std::string_view rest = line;
    std::size_t n = 0;
    for (; n < cells.size(); ++n) {
      const auto comma = rest.find(',');
      cells[n] = rest.substr(0, comma);
      if (comma == std::string_view::npos) {
        ++n;
        break;
      }
      rest = rest.substr(comma + 1);
    }
    if (n != cells.size()) {
      throw IngestionError(fmt::format("rollout CSV row {}: expected 7 fields", row));
    }
    try {
      r.sample_id = parse_int(cells[0], "sample_id");
      RolloutState s;
      s.t = parse_double(cells[1], "t");
      s.d = parse_double(cells[2], "d");
      s.v_h = parse_double(cells[3], "V_H");
      s.v_pv = parse_double(cells[4], "V_PV");
      r.states.push_back(s);
      r.accel.push_back(parse_double(cells[5], "a_applied"));
      r.theta_segment.push_back(parse_int(cells[6], "theta_segment_index"));
    } catch (const ConfigError& e) {
      throw IngestionError(fmt::format("rollout CSV row {}: {}", row, e.what()));
    }
  }
  for (std::size_t k = 1; k < r.states.size(); ++k) {
    r.states[k].s_h = r.states[k - 1].s_h +
                      r.states[k - 1].v_h * (r.states[k].t - r.states[k - 1].t);
  }
  return r;
}

}  // namespace stochdrive
