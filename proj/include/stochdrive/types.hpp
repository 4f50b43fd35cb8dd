#pragma once

#include <array>
#include <cstddef>
#include <optional>
#include <span>
#include <string_view>
#include <vector>

namespace stochdrive {

enum class PhaseLabel { SteadyFollowing, FreeMotion, UnsteadyFollowing };

inline constexpr std::array<PhaseLabel, 3> kAllPhases = {
    PhaseLabel::SteadyFollowing, PhaseLabel::FreeMotion,
    PhaseLabel::UnsteadyFollowing};

// Short stable names used in files: "steady", "free", "unsteady".
std::string_view to_string(PhaseLabel phase);
std::optional<PhaseLabel> phase_from_string(std::string_view name);

// The six cost features. Values index into FeatureArray.
enum class Feature : std::size_t {
  Accel = 0,            // f_a
  DesiredSpeed = 1,     // f_ds
  RelativeSpeed = 2,    // f_rs
  CarFollowingGap = 3,  // f_cd
  SafeGap = 4,          // f_sd
  FreeGap = 5,          // f_fd
};

inline constexpr std::size_t kNumFeatures = 6;
using FeatureArray = std::array<double, kNumFeatures>;

std::string_view to_string(Feature f);
std::optional<Feature> feature_from_string(std::string_view name);

// Features used in each driving phase, in canonical order.
std::span<const Feature> feature_set(PhaseLabel phase);

// Values keyed by the phase's feature set (same order as feature_set()).
// Used both for feature values and for cost weights.
struct PhaseVector {
  PhaseLabel phase = PhaseLabel::SteadyFollowing;
  std::vector<double> values;

  std::size_t size() const { return values.size(); }
  double at(Feature f) const;
  std::span<const Feature> features() const { return feature_set(phase); }

  // Scatter into a full six-slot array; absent features are zero.
  FeatureArray to_array() const;
  static PhaseVector from_array(PhaseLabel phase, const FeatureArray& a);

  bool operator==(const PhaseVector&) const = default;
};

using FeatureVector = PhaseVector;

struct WeightVector {
  PhaseVector weights;
  long segment_index = -1;

  PhaseLabel phase() const { return weights.phase; }
  static WeightVector ones(PhaseLabel phase, long segment_index = -1);

  bool operator==(const WeightVector&) const = default;
};

}  // namespace stochdrive
