#include "stochdrive/types.hpp"

#include <algorithm>

#include <fmt/format.h>

#include "stochdrive/errors.hpp"

namespace stochdrive {

std::string_view to_string(PhaseLabel phase) {
  switch (phase) {
    case PhaseLabel::SteadyFollowing:
      return "steady";
    case PhaseLabel::FreeMotion:
      return "free";
    case PhaseLabel::UnsteadyFollowing:
      return "unsteady";
  }
  return "?";
}

std::optional<PhaseLabel> phase_from_string(std::string_view name) {
  for (auto p : kAllPhases) {
    if (to_string(p) == name) return p;
  }
  return std::nullopt;
}

namespace {
constexpr std::array<std::string_view, kNumFeatures> kFeatureNames = {
    "f_a", "f_ds", "f_rs", "f_cd", "f_sd", "f_fd"};

constexpr std::array<Feature, 4> kSteady = {
    Feature::Accel, Feature::DesiredSpeed, Feature::RelativeSpeed,
    Feature::CarFollowingGap};
constexpr std::array<Feature, 3> kFree = {
    Feature::Accel, Feature::DesiredSpeed, Feature::FreeGap};
constexpr std::array<Feature, 4> kUnsteady = {
    Feature::Accel, Feature::DesiredSpeed, Feature::RelativeSpeed,
    Feature::SafeGap};
}  // namespace

std::string_view to_string(Feature f) {
  return kFeatureNames[static_cast<std::size_t>(f)];
}

std::optional<Feature> feature_from_string(std::string_view name) {
  for (std::size_t i = 0; i < kNumFeatures; ++i) {
    if (kFeatureNames[i] == name) return static_cast<Feature>(i);
  }
  return std::nullopt;
}

std::span<const Feature> feature_set(PhaseLabel phase) {
  switch (phase) {
    case PhaseLabel::SteadyFollowing:
      return kSteady;
    case PhaseLabel::FreeMotion:
      return kFree;
    case PhaseLabel::UnsteadyFollowing:
      return kUnsteady;
  }
  return {};
}

double PhaseVector::at(Feature f) const {
  const auto set = features();
  const auto it = std::find(set.begin(), set.end(), f);
  if (it == set.end()) {
    throw DomainError(fmt::format("feature {} not in the {} feature set",
                                  to_string(f), to_string(phase)));
  }
  return values.at(static_cast<std::size_t>(it - set.begin()));
}

FeatureArray PhaseVector::to_array() const {
  FeatureArray out{};
  const auto set = features();
  for (std::size_t i = 0; i < set.size(); ++i) {
    out[static_cast<std::size_t>(set[i])] = values.at(i);
  }
  return out;
}

PhaseVector PhaseVector::from_array(PhaseLabel phase, const FeatureArray& a) {
  PhaseVector v{phase, {}};
  for (auto f : feature_set(phase)) {
    v.values.push_back(a[static_cast<std::size_t>(f)]);
  }
  return v;
}

WeightVector WeightVector::ones(PhaseLabel phase, long segment_index) {
  WeightVector w;
  w.weights.phase = phase;
  w.weights.values.assign(feature_set(phase).size(), 1.0);
  w.segment_index = segment_index;
  return w;
}

}  // namespace stochdrive
