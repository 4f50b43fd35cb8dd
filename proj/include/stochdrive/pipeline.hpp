#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <string>
#include <vector>

#include "stochdrive/config.hpp"
#include "stochdrive/copula.hpp"
#include "stochdrive/learner.hpp"
#include "stochdrive/metrics.hpp"
#include "stochdrive/nmpc.hpp"
#include "stochdrive/parallel.hpp"
#include "stochdrive/serialization.hpp"
#include "stochdrive/synth.hpp"

namespace stochdrive {

// Segments every trace and labels the segments by phase; traces shorter
// than T_H are skipped with a warning.
std::vector<TrajectorySegment> segment_and_classify(
    const std::vector<LeaderFollowerTrace>& traces, const PipelineConfig& cfg);

WeightClusters clusters_of(const LearnedWeights& learned);
FixedWeights fixed_weights_of(const std::map<PhaseLabel, LearnResult>& dirl);

// Componentwise mean; segment_index -1.
WeightVector mean_weights(std::span<const WeightVector> cluster);

// Fits one copula per cluster. Clusters that cannot be fitted are warned
// about and represented by their mean weight vector instead.
CopulaSet fit_copulas(const WeightClusters& clusters,
                      BandwidthRule rule = BandwidthRule::Silverman);

// n rollouts per scenario, keyed by scenario id.
GeneratedByScenario generate_all(const std::vector<ScenarioSpec>& scenarios,
                                 const WeightSource& source,
                                 const PipelineConfig& cfg, std::uint64_t seed,
                                 std::size_t n, Execution exec);

ObservedByScenario group_by_scenario(const std::vector<LeaderFollowerTrace>& traces);

struct ExperimentOptions {
  PipelineConfig cfg;
  SynthDriverParams driver;
  std::vector<ScenarioSpec> scenarios = builtin_scenarios();
  int trials = 30;
  std::size_t train_per_scenario = 25;
  std::uint64_t seed = 0;
  Execution exec = Execution::Parallel;
};

struct ExperimentResult {
  std::vector<LeaderFollowerTrace> traces;
  std::vector<SplitEntry> split;
  std::vector<TrajectorySegment> train_segments;
  LearnedWeights learned;
  std::map<PhaseLabel, LearnResult> dirl;
  CopulaSet copulas;
  GeneratedByScenario sirl_rollouts;
  GeneratedByScenario dirl_rollouts;
  EvalReport report;
};

// Stage seeds derived from the experiment seed.
std::uint64_t stage_seed(std::uint64_t seed, std::string_view stage);

// synth -> split -> segment -> learn (SIRL and DIRL) -> fit copulas ->
// generate rollout_samples per scenario in both modes -> evaluate on the
// test traces.
ExperimentResult run_experiment(const ExperimentOptions& opts);

// Writes every CSV and model file of an experiment below `dir`.
void write_experiment(const ExperimentResult& result,
                      const std::filesystem::path& dir);

}  // namespace stochdrive
