#include "stochdrive/synth.hpp"

#include <algorithm>
#include <cmath>
#include <random>
#include <sstream>

#include <fmt/format.h>

#include "stochdrive/errors.hpp"
#include "stochdrive/kv_file.hpp"

namespace stochdrive {

double ScenarioSpec::leader_speed(double t) const {
  const auto& p = leader_profile;
  if (t <= p.front().first) return p.front().second;
  if (t >= p.back().first) return p.back().second;
  const auto it = std::upper_bound(
      p.begin(), p.end(), t,
      [](double x, const std::pair<double, double>& b) { return x < b.first; });
  const auto& [t1, v1] = *it;
  const auto& [t0, v0] = *(it - 1);
  const double w = (t - t0) / (t1 - t0);
  return v0 + w * (v1 - v0);
}

double ScenarioSpec::max_leader_speed() const {
  double m = 0.0;
  for (const auto& [t, v] : leader_profile) m = std::max(m, v);
  return m;
}

void ScenarioSpec::validate(double safe_gap) const {
  if (scenario_id.empty()) throw ValidationError("scenario_id is empty");
  if (leader_profile.empty()) {
    throw ValidationError(
        fmt::format("scenario {}: empty leader_profile", scenario_id));
  }
  for (std::size_t i = 0; i < leader_profile.size(); ++i) {
    if (leader_profile[i].second < 0.0) {
      throw ValidationError(
          fmt::format("scenario {}: negative leader speed", scenario_id));
    }
    if (i > 0 && !(leader_profile[i].first > leader_profile[i - 1].first)) {
      throw ValidationError(fmt::format(
          "scenario {}: profile times must increase", scenario_id));
    }
  }
  if (!(duration > 0.0)) {
    throw ValidationError(fmt::format("scenario {}: duration must be > 0",
                                      scenario_id));
  }
  if (!(initial_gap >= safe_gap)) {
    throw ValidationError(fmt::format(
        "scenario {}: initial_gap {} below safe gap {}", scenario_id,
        initial_gap, safe_gap));
  }
  if (!(initial_follower_speed >= 0.0)) {
    throw ValidationError(
        fmt::format("scenario {}: negative follower speed", scenario_id));
  }
}

LeaderSeries simulate_leader(const ScenarioSpec& scenario, double dt,
                             std::size_t steps, double initial_position) {
  LeaderSeries out;
  out.position.resize(steps + 1);
  out.velocity.resize(steps + 1);
  out.position[0] = initial_position;
  for (std::size_t k = 0; k <= steps; ++k) {
    out.velocity[k] = scenario.leader_speed(static_cast<double>(k) * dt);
    if (k > 0) {
      out.position[k] = out.position[k - 1] + out.velocity[k - 1] * dt;
    }
  }
  return out;
}

void SynthDriverParams::validate() const {
  if (!(desired_speed > 0.0) || !(time_headway > 0.0) || !(min_gap > 0.0) ||
      !(max_accel > 0.0) || !(comfortable_decel > 0.0) || !(max_decel > 0.0) ||
      !(exponent > 0.0) || !(sample_time > 0.0)) {
    throw ValidationError("driver parameters must be positive");
  }
  if (jitter < 0.0 || accel_noise < 0.0) {
    throw ValidationError("jitter and accel_noise must be >= 0");
  }
}

void apply_driver_value(SynthDriverParams& p, const std::string& key,
                        const std::string& value) {
  const double v = parse_double(value, key);
  if (key == "desired_speed") p.desired_speed = v;
  else if (key == "time_headway") p.time_headway = v;
  else if (key == "min_gap") p.min_gap = v;
  else if (key == "max_accel") p.max_accel = v;
  else if (key == "comfortable_decel") p.comfortable_decel = v;
  else if (key == "max_decel") p.max_decel = v;
  else if (key == "exponent") p.exponent = v;
  else if (key == "jitter") p.jitter = v;
  else if (key == "accel_noise") p.accel_noise = v;
  else if (key == "sample_time") p.sample_time = v;
  else throw ConfigError(fmt::format("unknown driver key '{}'", key));
}

SynthDriverParams load_driver_params(const std::filesystem::path& path) {
  SynthDriverParams p;
  for (const auto& e : read_key_value_file(path)) {
    apply_driver_value(p, e.key, e.value);
  }
  p.validate();
  return p;
}

namespace {

std::vector<std::pair<double, double>> parse_profile(std::string_view text) {
  std::vector<std::pair<double, double>> out;
  while (!text.empty()) {
    const auto comma = text.find(',');
    const auto item = trim(text.substr(0, comma));
    const auto colon = item.find(':');
    if (colon == std::string_view::npos) {
      throw ConfigError(fmt::format(
          "key 'leader_profile': expected t:v pairs, got '{}'", item));
    }
    out.emplace_back(parse_double(item.substr(0, colon), "leader_profile"),
                     parse_double(item.substr(colon + 1), "leader_profile"));
    if (comma == std::string_view::npos) break;
    text = text.substr(comma + 1);
  }
  return out;
}

ScenarioSpec scenario_from_entries(const std::vector<KeyValueEntry>& entries) {
  ScenarioSpec s;
  for (const auto& e : entries) {
    if (e.key == "scenario_id") s.scenario_id = e.value;
    else if (e.key == "leader_profile") s.leader_profile = parse_profile(e.value);
    else if (e.key == "duration") s.duration = parse_double(e.value, e.key);
    else if (e.key == "initial_gap") s.initial_gap = parse_double(e.value, e.key);
    else if (e.key == "initial_follower_speed")
      s.initial_follower_speed = parse_double(e.value, e.key);
    else throw ConfigError(fmt::format("unknown scenario key '{}'", e.key));
  }
  return s;
}

}  // namespace

ScenarioSpec load_scenario(const std::filesystem::path& path) {
  return scenario_from_entries(read_key_value_file(path));
}

ScenarioSpec parse_scenario(std::string_view text) {
  std::istringstream in{std::string(text)};
  return scenario_from_entries(parse_key_values(in, "<scenario>"));
}

std::string to_string(const ScenarioSpec& s) {
  std::string profile;
  for (const auto& [t, v] : s.leader_profile) {
    if (!profile.empty()) profile += ", ";
    profile += fmt::format("{}:{}", t, v);
  }
  return fmt::format(
      "scenario_id = {}\nduration = {}\ninitial_gap = {}\n"
      "initial_follower_speed = {}\nleader_profile = {}\n",
      s.scenario_id, s.duration, s.initial_gap, s.initial_follower_speed,
      profile);
}

std::vector<ScenarioSpec> builtin_scenarios() {
  return {
      {"cruise", {{0, 15}, {45, 15}}, 45, 30, 15},
      {"stop_and_go",
       {{0, 10}, {8, 10}, {12, 0}, {18, 0}, {24, 10}, {32, 10}, {36, 0},
        {41, 0}, {45, 6}},
       45, 25, 10},
      {"ramp_up", {{0, 5}, {30, 20}, {45, 20}}, 45, 15, 5},
      {"hard_braking",
       {{0, 20}, {10, 20}, {14, 5}, {25, 5}, {35, 18}, {45, 18}}, 45, 40, 20},
      {"free_road", {{0, 30}, {45, 30}}, 45, 120, 20},
      {"slow_leader", {{0, 16}, {6, 8}, {45, 8}}, 45, 45, 16},
      {"oscillating",
       {{0, 12}, {5, 16}, {10, 12}, {15, 16}, {20, 12}, {25, 16}, {30, 12},
        {35, 16}, {40, 12}, {45, 16}},
       45, 28, 14},
      {"start_from_stop", {{0, 0}, {3, 0}, {15, 14}, {45, 14}}, 45, 8, 0},
      {"urban_mixed", {{0, 12}, {10, 18}, {20, 6}, {30, 14}, {45, 14}}, 45, 25,
       12},
  };
}

std::uint64_t derive_seed(std::uint64_t seed, std::string_view scenario_id,
                          std::uint64_t index) {
  // FNV-1a over the id, then splitmix64 finalisation.
  std::uint64_t h = 1469598103934665603ULL;
  for (unsigned char c : scenario_id) {
    h ^= c;
    h *= 1099511628211ULL;
  }
  std::uint64_t z = seed ^ (h + 0x9e3779b97f4a7c15ULL + (index << 17) +
                            (index >> 3) + index * 0xbf58476d1ce4e5b9ULL);
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

std::string trace_id(std::string_view scenario_id, int trial) {
  return fmt::format("{}__trial_{:03d}", scenario_id, trial);
}

std::string scenario_of_trace(std::string_view id) {
  const auto pos = id.rfind("__trial_");
  return std::string(pos == std::string_view::npos ? id : id.substr(0, pos));
}

LeaderFollowerTrace synth_trace(const ScenarioSpec& scenario,
                                const SynthDriverParams& base,
                                std::uint64_t seed, int trial) {
  std::mt19937_64 rng(derive_seed(seed, scenario.scenario_id,
                                  static_cast<std::uint64_t>(trial)));
  std::normal_distribution<double> normal(0.0, 1.0);
  auto jittered = [&](double nominal) {
    return nominal * std::exp(base.jitter * normal(rng));
  };
  SynthDriverParams p = base;
  p.desired_speed = jittered(base.desired_speed);
  p.time_headway = jittered(base.time_headway);
  p.min_gap = jittered(base.min_gap);
  p.max_accel = jittered(base.max_accel);
  p.comfortable_decel = jittered(base.comfortable_decel);

  const double dt = base.sample_time;
  const auto steps =
      static_cast<std::size_t>(std::llround(scenario.duration / dt));
  const LeaderSeries leader =
      simulate_leader(scenario, dt, steps, scenario.initial_gap);

  std::vector<TraceSample> samples(steps + 1);
  double s = 0.0;
  double v = scenario.initial_follower_speed;
  const double sqrt_ab = std::sqrt(p.max_accel * p.comfortable_decel);
  for (std::size_t k = 0; k <= steps; ++k) {
    const double gap = leader.position[k] - s;
    if (!(gap > 0.0)) {
      throw GenerationError(fmt::format(
          "collision in scenario {} trial {} at t={}", scenario.scenario_id,
          trial, static_cast<double>(k) * dt));
    }
    auto& out = samples[k];
    out.t = static_cast<double>(k) * dt;
    out.s_f = s;
    out.v_f = v;
    out.s_l = leader.position[k];
    out.v_l = leader.velocity[k];
    if (k == steps) break;

    const double desired_gap =
        p.min_gap + std::max(0.0, v * p.time_headway +
                                      v * (v - leader.velocity[k]) /
                                          (2.0 * sqrt_ab));
    double a = p.max_accel * (1.0 - std::pow(v / p.desired_speed, p.exponent) -
                              (desired_gap / gap) * (desired_gap / gap));
    a += p.accel_noise * normal(rng);
    a = std::clamp(a, -p.max_decel, p.max_accel);
    a = std::max(a, -v / dt);
    s += v * dt;
    v = std::max(0.0, v + a * dt);
  }
  // Recorded acceleration is the forward difference of the recorded speed.
  for (std::size_t k = 0; k < steps; ++k) {
    samples[k].a_f = (samples[k + 1].v_f - samples[k].v_f) / dt;
  }
  if (steps > 0) samples[steps].a_f = samples[steps - 1].a_f;
  for (std::size_t k = 0; k <= steps; ++k) {
    if (!(samples[k].gap() > 0.0)) {
      throw GenerationError(fmt::format("collision in scenario {} trial {}",
                                        scenario.scenario_id, trial));
    }
  }
  return make_trace(std::move(samples),
                    trace_id(scenario.scenario_id, trial));
}

std::vector<LeaderFollowerTrace> synth_dataset(
    const std::vector<ScenarioSpec>& scenarios, int trials_per_scenario,
    const SynthDriverParams& driver, std::uint64_t seed, Execution exec) {
  if (trials_per_scenario < 1) {
    throw ValidationError("trials_per_scenario must be >= 1");
  }
  driver.validate();
  for (const auto& s : scenarios) s.validate(0.0);
  const std::size_t trials = static_cast<std::size_t>(trials_per_scenario);
  std::vector<LeaderFollowerTrace> out(scenarios.size() * trials);
  for_each_index(out.size(), exec, [&](std::size_t i) {
    out[i] = synth_trace(scenarios[i / trials], driver, seed,
                         static_cast<int>(i % trials));
  });
  return out;
}

}  // namespace stochdrive
