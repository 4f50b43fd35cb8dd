#include "stochdrive/config.hpp"

#include <cmath>
#include <fstream>
#include <sstream>

#include <fmt/format.h>

#include "stochdrive/errors.hpp"

namespace stochdrive {

namespace {

// Returns round(num/den) when num is a positive integer multiple of den.
std::optional<int> integer_ratio(double num, double den) {
  if (!(num > 0.0) || !(den > 0.0)) return std::nullopt;
  const double r = num / den;
  const double k = std::round(r);
  if (k < 1.0 || std::abs(r - k) > 1e-9 * k) return std::nullopt;
  return static_cast<int>(k);
}

int to_int(std::string_view text, std::string_view key) {
  const auto v = parse_int(text, key);
  if (v < std::numeric_limits<int>::min() ||
      v > std::numeric_limits<int>::max()) {
    throw ConfigError(fmt::format("key '{}': value out of range", key));
  }
  return static_cast<int>(v);
}

}  // namespace

int PipelineConfig::subsegments_per_segment() const {
  const auto k = integer_ratio(segment_len, subsegment_len);
  if (!k) {
    throw ValidationError(fmt::format(
        "segment_len_TH={} is not a positive integer multiple of "
        "subsegment_len_Tp={}",
        segment_len, subsegment_len));
  }
  return *k;
}

int PipelineConfig::steps_per_subsegment() const {
  const auto k = integer_ratio(subsegment_len, sample_time);
  if (!k) {
    throw ValidationError(fmt::format(
        "subsegment_len_Tp={} is not a positive integer multiple of "
        "sample_time_Ts={}",
        subsegment_len, sample_time));
  }
  return *k;
}

double PipelineConfig::learning_rate(int epoch) const {
  const int halvings = (epoch - 1) / lr_halve_every_epochs;
  return std::ldexp(lr_initial, -halvings);
}

void PipelineConfig::validate() const {
  if (!(sample_time > 0.0)) {
    throw ValidationError("sample_time_Ts must be > 0");
  }
  subsegments_per_segment();
  steps_per_subsegment();
  if (!(safe_gap > 0.0)) throw ValidationError("safe_gap_ds must be > 0");
  if (!(v_min >= 0.0)) throw ValidationError("v_min must be >= 0");
  if (v_max.kind == SpeedLimitPolicy::Kind::FixedValue && !(v_max.value > v_min)) {
    throw ValidationError("fixed v_max_policy must exceed v_min");
  }
  if (!(lr_initial > 0.0)) throw ValidationError("lr_initial_eta must be > 0");
  if (lr_halve_every_epochs < 1) {
    throw ValidationError("lr_halve_every_epochs must be >= 1");
  }
  if (max_epochs < 1) throw ValidationError("max_epochs must be >= 1");
  if (!(grad_norm_tol > 0.0)) throw ValidationError("grad_norm_tol must be > 0");
  if (rollout_samples < 1) {
    throw ValidationError("rollout_samples_per_scenario must be >= 1");
  }
  if (!(accel_min < 0.0) || !(accel_max > 0.0)) {
    throw ValidationError("accel_min must be < 0 < accel_max");
  }
}

const std::vector<std::string>& config_keys() {
  static const std::vector<std::string> keys = {
      "segment_len_TH",     "subsegment_len_Tp",
      "sample_time_Ts",     "safe_gap_ds",
      "v_min",              "v_max_policy",
      "lr_initial_eta",     "lr_halve_every_epochs",
      "max_epochs",         "grad_norm_tol",
      "rollout_samples_per_scenario", "accel_min",
      "accel_max",          "rng_seed"};
  return keys;
}

void apply_config_value(PipelineConfig& cfg, const std::string& key,
                        const std::string& value) {
  if (key == "segment_len_TH") {
    cfg.segment_len = parse_double(value, key);
  } else if (key == "subsegment_len_Tp") {
    cfg.subsegment_len = parse_double(value, key);
  } else if (key == "sample_time_Ts") {
    cfg.sample_time = parse_double(value, key);
  } else if (key == "safe_gap_ds") {
    cfg.safe_gap = parse_double(value, key);
  } else if (key == "v_min") {
    cfg.v_min = parse_double(value, key);
  } else if (key == "v_max_policy") {
    if (trim(value) == "max_of_leader") {
      cfg.v_max = SpeedLimitPolicy::max_of_leader();
    } else {
      cfg.v_max = SpeedLimitPolicy::fixed(parse_double(value, key));
    }
  } else if (key == "lr_initial_eta") {
    cfg.lr_initial = parse_double(value, key);
  } else if (key == "lr_halve_every_epochs") {
    cfg.lr_halve_every_epochs = to_int(value, key);
  } else if (key == "max_epochs") {
    cfg.max_epochs = to_int(value, key);
  } else if (key == "grad_norm_tol") {
    cfg.grad_norm_tol = parse_double(value, key);
  } else if (key == "rollout_samples_per_scenario") {
    cfg.rollout_samples = to_int(value, key);
  } else if (key == "accel_min") {
    cfg.accel_min = parse_double(value, key);
  } else if (key == "accel_max") {
    cfg.accel_max = parse_double(value, key);
  } else if (key == "rng_seed") {
    cfg.rng_seed = parse_uint(value, key);
  } else {
    throw ConfigError(fmt::format("unknown config key '{}'", key));
  }
}

PipelineConfig config_from_entries(const std::vector<KeyValueEntry>& entries) {
  PipelineConfig cfg;
  for (const auto& e : entries) apply_config_value(cfg, e.key, e.value);
  cfg.validate();
  return cfg;
}

PipelineConfig parse_config(std::string_view text) {
  std::istringstream in{std::string(text)};
  return config_from_entries(parse_key_values(in, "<config>"));
}

PipelineConfig load_config(const std::filesystem::path& path) {
  return config_from_entries(read_key_value_file(path));
}

std::string to_string(const PipelineConfig& cfg) {
  std::string out;
  auto put = [&out](std::string_view k, const auto& v) {
    out += fmt::format("{} = {}\n", k, v);
  };
  put("segment_len_TH", cfg.segment_len);
  put("subsegment_len_Tp", cfg.subsegment_len);
  put("sample_time_Ts", cfg.sample_time);
  put("safe_gap_ds", cfg.safe_gap);
  put("v_min", cfg.v_min);
  if (cfg.v_max.kind == SpeedLimitPolicy::Kind::MaxOfLeader) {
    put("v_max_policy", "max_of_leader");
  } else {
    put("v_max_policy", cfg.v_max.value);
  }
  put("lr_initial_eta", cfg.lr_initial);
  put("lr_halve_every_epochs", cfg.lr_halve_every_epochs);
  put("max_epochs", cfg.max_epochs);
  put("grad_norm_tol", cfg.grad_norm_tol);
  put("rollout_samples_per_scenario", cfg.rollout_samples);
  put("accel_min", cfg.accel_min);
  put("accel_max", cfg.accel_max);
  if (cfg.rng_seed) put("rng_seed", *cfg.rng_seed);
  return out;
}

}  // namespace stochdrive
