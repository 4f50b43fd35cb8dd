#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <utility>
#include <vector>

#include "stochdrive/parallel.hpp"
#include "stochdrive/trace.hpp"

namespace stochdrive {

// Scripted leader speed schedule plus follower initial conditions.
struct ScenarioSpec {
  std::string scenario_id;
  // Breakpoints (t [s], v_l [m/s]) of a piecewise-linear speed profile,
  // held constant outside the listed range.
  std::vector<std::pair<double, double>> leader_profile;
  double duration = 0.0;
  double initial_gap = 0.0;
  double initial_follower_speed = 0.0;

  double leader_speed(double t) const;
  double max_leader_speed() const;
  void validate(double safe_gap) const;
};

// Leader motion sampled at dt from t=0 for `steps + 1` samples.
// Positions use the same forward-Euler update as the gap dynamics.
struct LeaderSeries {
  std::vector<double> position;
  std::vector<double> velocity;
};
LeaderSeries simulate_leader(const ScenarioSpec& scenario, double dt,
                             std::size_t steps, double initial_position);

// Nominal intelligent-driver-model parameters and per-trial variation.
struct SynthDriverParams {
  double desired_speed = 24.0;    // [m/s]
  double time_headway = 1.6;      // [s]
  double min_gap = 7.0;           // jam distance [m]
  double max_accel = 1.4;         // [m/s^2]
  double comfortable_decel = 2.0; // [m/s^2]
  double max_decel = 8.0;         // hard braking bound [m/s^2]
  double exponent = 4.0;
  // Log-normal per-trial jitter (standard deviation of log multiplier).
  double jitter = 0.2;
  // Zero-mean Gaussian acceleration noise [m/s^2], redrawn every step.
  double accel_noise = 0.05;
  double sample_time = 0.1;

  void validate() const;
};

SynthDriverParams load_driver_params(const std::filesystem::path& path);
void apply_driver_value(SynthDriverParams& p, const std::string& key,
                        const std::string& value);

ScenarioSpec load_scenario(const std::filesystem::path& path);
ScenarioSpec parse_scenario(std::string_view text);
std::string to_string(const ScenarioSpec& s);

// Nine representative single-lane scenarios (cruise, stop-and-go, ramps,
// braking, free road, ...).
std::vector<ScenarioSpec> builtin_scenarios();

// Derives a per-(scenario, index) child seed.
std::uint64_t derive_seed(std::uint64_t seed, std::string_view scenario_id,
                          std::uint64_t index);

// Simulates one trial. Throws GenerationError on collision.
LeaderFollowerTrace synth_trace(const ScenarioSpec& scenario,
                                const SynthDriverParams& driver,
                                std::uint64_t seed, int trial);

// scenarios x trials traces, ordered scenario-major. Trace ids are
// "<scenario_id>__trial_<NNN>".
std::vector<LeaderFollowerTrace> synth_dataset(
    const std::vector<ScenarioSpec>& scenarios, int trials_per_scenario,
    const SynthDriverParams& driver, std::uint64_t seed,
    Execution exec = Execution::Parallel);

std::string trace_id(std::string_view scenario_id, int trial);
// Scenario part of a trace id ("cruise__trial_003" -> "cruise").
std::string scenario_of_trace(std::string_view trace_id);

}  // namespace stochdrive
