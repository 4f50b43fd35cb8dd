#pragma once

#include <cstddef>
#include <filesystem>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "stochdrive/config.hpp"
#include "stochdrive/types.hpp"

namespace stochdrive {

struct TraceSample {
  double t = 0.0;
  double s_f = 0.0;  // follower position [m]
  double v_f = 0.0;
  double a_f = 0.0;
  double s_l = 0.0;  // leader position [m]
  double v_l = 0.0;

  double gap() const { return s_l - s_f; }
  bool operator==(const TraceSample&) const = default;
};

// Uniformly sampled leader/follower longitudinal states.
struct LeaderFollowerTrace {
  std::string id;  // e.g. file stem; not part of the CSV payload
  double rate_hz = 0.0;
  std::vector<TraceSample> samples;

  double dt() const { return 1.0 / rate_hz; }
  double duration() const;
};

inline constexpr std::string_view kTraceHeader = "t,s_f,v_f,a_f,s_l,v_l";

// Checks the trace invariants and infers rate_hz from the timestamps.
// Errors cite the 1-based data row.
LeaderFollowerTrace make_trace(std::vector<TraceSample> samples,
                               std::string id = {});

LeaderFollowerTrace read_trace(const std::filesystem::path& path);
LeaderFollowerTrace parse_trace(std::string_view csv, std::string id = {});
void write_trace(const std::filesystem::path& path,
                 const LeaderFollowerTrace& trace);
std::string format_trace(const LeaderFollowerTrace& trace);

// A T_H window of a trace split into L contiguous T_p subsegments. Windows
// are closed intervals: subsegment k spans samples
// [first_sample + k*steps, first_sample + (k+1)*steps], so neighbours share
// their boundary sample.
struct TrajectorySegment {
  std::shared_ptr<const LeaderFollowerTrace> trace;
  long segment_index = 0;  // position within the trace
  std::size_t first_sample = 0;
  int steps_per_subsegment = 0;
  int num_subsegments = 0;
  std::optional<PhaseLabel> phase;

  std::span<const TraceSample> window() const;
  std::span<const TraceSample> subsegment(int k) const;
  double start_time() const { return window().front().t; }
};

// Splits a trace into floor(duration / T_H) segments; the trailing
// remainder is dropped. Throws EmptyResultError when duration < T_H and
// ValidationError when the trace rate does not match T_s.
std::vector<TrajectorySegment> segment_trace(
    std::shared_ptr<const LeaderFollowerTrace> trace,
    const PipelineConfig& cfg);

}  // namespace stochdrive
