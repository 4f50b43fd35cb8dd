#pragma once

#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "stochdrive/bfgs.hpp"
#include "stochdrive/config.hpp"
#include "stochdrive/features.hpp"
#include "stochdrive/parallel.hpp"
#include "stochdrive/quintic.hpp"
#include "stochdrive/trace.hpp"
#include "stochdrive/types.hpp"

namespace stochdrive {

// A quintic sampled on the feature grid.
struct SampledTrajectory {
  std::vector<double> position;
  std::vector<double> velocity;
  std::vector<double> acceleration;

  FollowerSamples view() const { return {position, velocity, acceleration}; }
};

SampledTrajectory sample_quintic(const QuinticSegment& seg, double dt,
                                 std::size_t samples);

struct SubsegmentOptimum {
  QuinticSegment segment;
  double cost = 0.0;        // theta^T f at the returned coefficients
  double start_cost = 0.0;  // theta^T f with zero free coefficients
  double gradient_norm = 0.0;
  int iterations = 0;
};

// theta^T f of the quintic pinned at `initial` with the given free
// coefficients (c0, c1, c2), evaluated on ctx's grid.
double subsegment_cost(const KinematicState& initial,
                       const std::array<double, 3>& free,
                       const WeightVector& theta, const FeatureContext& ctx);

// Most likely continuation under theta: minimises theta^T f over the three
// free high-order coefficients, starting from zero, by BFGS with
// finite-difference gradients.
SubsegmentOptimum optimize_subsegment(const KinematicState& initial,
                                      const WeightVector& theta,
                                      const FeatureContext& ctx,
                                      const BfgsOptions& opts = {});

// One demonstrated planning subsegment prepared for learning.
struct DemoSubsegment {
  KinematicState initial;
  FeatureContext ctx;
  FeatureArray observed{};
};

std::vector<DemoSubsegment> prepare_demonstrations(
    const TrajectorySegment& segment, const PipelineConfig& cfg);

struct EpochRecord {
  int epoch = 0;
  double grad_norm = 0.0;
  std::vector<double> weights;  // theta used during this epoch
  double learning_rate = 0.0;
};

using LearnTrace = std::vector<EpochRecord>;

// theta -= eta * grad / ||grad||_2. A zero gradient leaves theta unchanged.
void ngd_step(std::span<double> theta, std::span<const double> grad,
              double eta);

struct LearnResult {
  WeightVector theta;
  LearnTrace trace;
  bool converged = false;
  // Stopped because the next weights left the inner cost without a
  // minimizer; theta is the last epoch's weights.
  bool ill_posed = false;
  double final_grad_norm = 0.0;
  FeatureVector observed;  // mean demonstrated features
  FeatureVector expected;  // mean optimized features at the last evaluation
};

// Normalized-gradient feature matching over a pool of demonstrations:
// theta starts at all ones and moves by eta * (f_obs - f_exp)/||.|| per
// epoch until the gradient norm drops below cfg.grad_norm_tol.
// Subsegment optimizations within an epoch use `exec`.
LearnResult learn_weights(std::span<const DemoSubsegment> demos,
                          PhaseLabel phase, const PipelineConfig& cfg,
                          Execution exec = Execution::Serial,
                          const BfgsOptions& inner = {});

// Per-segment weights (stochastic model). Requires segment.phase.
LearnResult learn_segment(const TrajectorySegment& segment,
                          const PipelineConfig& cfg);

struct SegmentLearnOutcome {
  long global_index = 0;  // position in the input list
  std::string trace_id;
  long segment_index = 0;
  PhaseLabel phase = PhaseLabel::SteadyFollowing;
  std::optional<LearnResult> result;
  std::string error;  // set when learning failed
};

struct LearnedWeights {
  std::vector<SegmentLearnOutcome> segments;

  // Successfully learned weight vectors of one phase, in input order.
  std::vector<WeightVector> cluster(PhaseLabel phase) const;
};

// Learns every segment independently (OpenMP across segments in Parallel
// mode; the Serial mode is the reference). Failed segments are reported
// and excluded; clusters with fewer than two members are warned about.
LearnedWeights learn_all(const std::vector<TrajectorySegment>& segments,
                         const PipelineConfig& cfg,
                         Execution exec = Execution::Parallel);

// Deterministic baseline: one weight vector per phase cluster, learned from
// the pooled demonstrations of all its segments. Empty clusters are
// skipped with a warning.
std::map<PhaseLabel, LearnResult> learn_dirl(
    const std::vector<TrajectorySegment>& segments, const PipelineConfig& cfg,
    Execution exec = Execution::Parallel);

}  // namespace stochdrive
