#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <string>
#include <string_view>
#include <vector>

#include "stochdrive/learner.hpp"
#include "stochdrive/trace.hpp"
#include "stochdrive/types.hpp"

namespace stochdrive {

// Learned weights: one row per (segment, feature).
inline constexpr std::string_view kWeightsHeader =
    "cluster,segment_index,feature_name,weight";
// Per-epoch gradient curves.
inline constexpr std::string_view kLearnTraceHeader =
    "segment_index,epoch,grad_norm,eta";
inline constexpr std::string_view kDirlTraceHeader =
    "cluster,epoch,grad_norm,eta";
inline constexpr std::string_view kSegmentManifestHeader =
    "segment_index,trace_id,trace_segment,start_t,phase,status,epochs,"
    "final_grad_norm,error";
inline constexpr std::string_view kSplitHeader = "trace_id,scenario_id,split";

using WeightClusters = std::map<PhaseLabel, std::vector<WeightVector>>;

std::string format_weights_csv(const LearnedWeights& learned);
// DIRL weights use segment_index -1.
std::string format_weights_csv(const std::map<PhaseLabel, LearnResult>& dirl);
// Groups rows into weight vectors; throws IngestionError on unknown
// clusters or features, or a row set not matching a phase feature set.
WeightClusters parse_weights_csv(std::string_view csv);

std::string format_learn_trace_csv(const LearnedWeights& learned);
std::string format_learn_trace_csv(const std::map<PhaseLabel, LearnResult>& dirl);
std::string format_segment_manifest(const LearnedWeights& learned,
                                    const std::vector<TrajectorySegment>& segs);

enum class Split { Train, Test };
std::string_view to_string(Split s);

struct SplitEntry {
  std::string trace_id;
  std::string scenario_id;
  Split split = Split::Train;
};

// Per scenario, a seeded shuffle puts `train_per_scenario` traces in the
// training set and the rest in the test set. The result is sorted by trace
// id. Scenarios with no remaining test traces are warned about.
std::vector<SplitEntry> split_train_test(const std::vector<std::string>& ids,
                                         std::size_t train_per_scenario,
                                         std::uint64_t seed);

std::string format_split_manifest(const std::vector<SplitEntry>& split);
std::vector<SplitEntry> parse_split_manifest(std::string_view csv);

std::string read_text_file(const std::filesystem::path& path);
// Writes atomically enough for stage handoff: creates parent directories.
void write_text_file(const std::filesystem::path& path, std::string_view text);

// All *.csv traces in a directory, sorted by file name.
std::vector<LeaderFollowerTrace> read_trace_dir(const std::filesystem::path& dir);

}  // namespace stochdrive
