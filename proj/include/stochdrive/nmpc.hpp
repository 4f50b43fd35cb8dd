#pragma once

#include <cstdint>
#include <map>
#include <random>
#include <span>
#include <string>
#include <variant>
#include <vector>

#include "stochdrive/config.hpp"
#include "stochdrive/copula.hpp"
#include "stochdrive/features.hpp"
#include "stochdrive/parallel.hpp"
#include "stochdrive/synth.hpp"
#include "stochdrive/types.hpp"

namespace stochdrive {

struct RolloutState {
  double t = 0.0;
  double d = 0.0;     // gap [m]
  double v_h = 0.0;   // follower speed
  double v_pv = 0.0;  // leader speed
  double s_h = 0.0;   // follower position, integrated for reporting
};

// Discretized inter-vehicle dynamics. No constraint handling: the planner
// is responsible for never selecting an infeasible acceleration.
RolloutState step_dynamics(const RolloutState& state, double accel,
                           double ts, double v_pv_next);

struct SpeedBounds {
  double v_min = 0.0;
  double v_max = 0.0;
};

// Cost and constraint violation of holding `accel` over the preview.
struct HorizonEvaluation {
  double cost = 0.0;       // theta^T f
  double violation = 0.0;  // sum of squared constraint violations
  double penalized() const { return cost + 1e6 * violation; }
};

// leader_preview holds the leader speed at t + k*T_s for k = 0..n with
// n = T_p / T_s. Throws DomainError on a short preview.
HorizonEvaluation evaluate_horizon(const RolloutState& state, double accel,
                                   const WeightVector& theta,
                                   std::span<const double> leader_preview,
                                   const PipelineConfig& cfg,
                                   const SpeedBounds& bounds);

// The 41 evenly spaced candidate accelerations over [accel_min, accel_max].
std::vector<double> acceleration_grid(const PipelineConfig& cfg);

struct PlanResult {
  double accel = 0.0;
  bool feasible = true;  // false: no candidate satisfies the constraints
  double cost = 0.0;
};

// Constant-acceleration receding-horizon step: coarse grid search followed
// by golden-section refinement inside the feasible part of the bracket
// around the best grid point. When nothing is feasible returns accel_min
// with feasible = false.
PlanResult plan_step(const RolloutState& state, const WeightVector& theta,
                     std::span<const double> leader_preview,
                     const PipelineConfig& cfg, const SpeedBounds& bounds);

// Weight vectors per phase cluster, either sampled from fitted copulas
// (stochastic model) or fixed (deterministic baseline).
struct CopulaSet {
  std::map<PhaseLabel, CopulaModel> models;
  // Cluster mean weights for clusters whose copula could not be fitted.
  std::map<PhaseLabel, WeightVector> fallback;
};
struct FixedWeights {
  std::map<PhaseLabel, WeightVector> weights;
};
using WeightSource = std::variant<CopulaSet, FixedWeights>;

// Draws the weight vector for a phase. A phase without a copula uses its
// fallback weights if any, otherwise the nearest phase that has a model
// (steady <-> unsteady, then free).
WeightVector draw_weights(const WeightSource& source, PhaseLabel phase,
                          std::mt19937_64& rng);

struct RolloutResult {
  std::string scenario_id;
  long sample_id = 0;
  std::vector<RolloutState> states;   // uniformly spaced at T_s
  std::vector<double> accel;          // applied accel per state (last repeats)
  std::vector<long> theta_segment;    // T_H segment index per state
  std::vector<WeightVector> theta_schedule;  // one per T_H segment
  // Steps where no feasible acceleration existed. Forced braking is
  // applied, but never below the speed floor v_min.
  int forced_steps = 0;

  bool flagged() const { return forced_steps > 0; }
};

SpeedBounds speed_bounds(const ScenarioSpec& scenario,
                         const PipelineConfig& cfg);

// Phase of the upcoming window assuming the follower coasts.
PhaseLabel preview_phase(const RolloutState& state,
                         std::span<const double> leader_speed, double ts);

RolloutResult rollout(const ScenarioSpec& scenario, const WeightSource& source,
                      const PipelineConfig& cfg, std::uint64_t seed,
                      long sample_id = 0);

// n independent samples with per-sample derived seeds.
std::vector<RolloutResult> rollout_batch(const ScenarioSpec& scenario,
                                         const WeightSource& source,
                                         const PipelineConfig& cfg,
                                         std::uint64_t seed, std::size_t n,
                                         Execution exec = Execution::Parallel);

inline constexpr std::string_view kRolloutHeader =
    "sample_id,t,d,V_H,V_PV,a_applied,theta_segment_index";

std::string format_rollout(const RolloutResult& r);
RolloutResult parse_rollout(std::string_view csv);

}  // namespace stochdrive
