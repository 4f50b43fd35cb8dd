#pragma once

#include <map>
#include <span>
#include <string>
#include <vector>

#include "stochdrive/nmpc.hpp"
#include "stochdrive/trace.hpp"

namespace stochdrive {

// sqrt(mean((a - b)^2)). Throws DomainError on a length mismatch or empty
// input.
double rmse_series(std::span<const double> a, std::span<const double> b);

// Uniform grid from 0 to t_end with spacing dt; t_end itself is always
// the last point.
std::vector<double> uniform_grid(double t_end, double dt);

// Piecewise-linear interpolation of (t, y) at query times inside
// [t.front(), t.back()]. Knots are reproduced exactly.
std::vector<double> resample_linear(std::span<const double> t,
                                    std::span<const double> y,
                                    std::span<const double> query);

struct ScenarioScore {
  std::string scenario_id;
  double speed_rmse = 0.0;
  double accel_rmse = 0.0;
  std::size_t observed_traces = 0;
  std::size_t generated_samples = 0;
};

struct ModeScore {
  std::vector<ScenarioScore> scenarios;  // sorted by scenario id
  double speed_rmse = 0.0;               // mean over scenarios
  double accel_rmse = 0.0;
};

using ObservedByScenario = std::map<std::string, std::vector<LeaderFollowerTrace>>;
using GeneratedByScenario = std::map<std::string, std::vector<RolloutResult>>;

// Mean observed series of one scenario on a common grid.
struct MeanSeries {
  std::vector<double> t;
  std::vector<double> speed;
  std::vector<double> accel;
};

// Pointwise mean over traces after resampling all of them to grid `t`.
MeanSeries mean_observed(std::span<const LeaderFollowerTrace> traces,
                         std::span<const double> t);

// Scores every generated sample against the pointwise mean observed series
// of its scenario, averaging over samples and then over scenarios. Time
// series are resampled to the coarser of the two grids over the shorter
// span. Scenarios missing observations or samples are skipped with a
// warning.
ModeScore evaluate(const ObservedByScenario& observed,
                   const GeneratedByScenario& generated);

struct EvalReport {
  ModeScore sirl;
  ModeScore dirl;

  // Relative RMSE reduction of SIRL over DIRL, percent.
  double speed_improvement() const;
  double accel_improvement() const;
};

// Reference improvements reported for the human driver data set.
inline constexpr double kReferenceSpeedImprovement = 24.0;
inline constexpr double kReferenceAccelImprovement = 27.0;

std::string format_report_table(const EvalReport& report);
// scenario_id,n_observed,n_sirl,n_dirl,speed_rmse_sirl,accel_rmse_sirl,
// speed_rmse_dirl,accel_rmse_dirl plus a final "overall" row.
std::string format_report_csv(const EvalReport& report);

// Long-format fan data: series,t,speed,accel with series "observed_mean"
// or "sample_<id>".
std::string format_fan_csv(std::span<const LeaderFollowerTrace> observed,
                           std::span<const RolloutResult> generated);

}  // namespace stochdrive
