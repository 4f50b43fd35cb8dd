#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "stochdrive/kv_file.hpp"

namespace stochdrive {

// Upper speed bound used by the trajectory generator.
struct SpeedLimitPolicy {
  enum class Kind { FixedValue, MaxOfLeader };
  Kind kind = Kind::MaxOfLeader;
  double value = 0.0;  // m/s, only meaningful for FixedValue

  static SpeedLimitPolicy max_of_leader() { return {}; }
  static SpeedLimitPolicy fixed(double v) { return {Kind::FixedValue, v}; }
  bool operator==(const SpeedLimitPolicy&) const = default;
};

struct PipelineConfig {
  double segment_len = 3.0;       // T_H [s]
  double subsegment_len = 1.0;    // T_p [s]
  double sample_time = 0.1;       // T_s [s]
  double safe_gap = 5.0;          // d_s [m]
  double v_min = 0.0;             // [m/s]
  SpeedLimitPolicy v_max = SpeedLimitPolicy::max_of_leader();
  double lr_initial = 0.2;
  int lr_halve_every_epochs = 5;
  int max_epochs = 100;
  double grad_norm_tol = 1e-2;
  int rollout_samples = 50;
  double accel_min = -6.0;  // actuator bounds searched by the planner [m/s^2]
  double accel_max = 4.0;
  std::optional<std::uint64_t> rng_seed;

  // L: planning subsegments per trajectory segment.
  int subsegments_per_segment() const;
  // Sample intervals per planning subsegment.
  int steps_per_subsegment() const;
  int steps_per_segment() const {
    return subsegments_per_segment() * steps_per_subsegment();
  }
  // Learning rate used in the given 1-based epoch.
  double learning_rate(int epoch) const;

  // Throws ValidationError on the first violated invariant.
  void validate() const;

  bool operator==(const PipelineConfig&) const = default;
};

// Every key accepted by the config file, in canonical order.
const std::vector<std::string>& config_keys();

// Applies one key/value pair. Unknown keys and unparsable values throw
// ConfigError naming the key.
void apply_config_value(PipelineConfig& cfg, const std::string& key,
                        const std::string& value);

PipelineConfig config_from_entries(const std::vector<KeyValueEntry>& entries);
PipelineConfig parse_config(std::string_view text);
PipelineConfig load_config(const std::filesystem::path& path);

// Canonical key=value rendering; parse_config(to_string(c)) == c.
std::string to_string(const PipelineConfig& cfg);

}  // namespace stochdrive
