#include <stdexcept>
#include <vector>

#include <gtest/gtest.h>

#include "stochdrive/errors.hpp"
#include "stochdrive/pipeline.hpp"
#include "test_util.hpp"

namespace stochdrive {
namespace {

TEST(ForEach, VisitsEveryIndexOnce) {
  for (auto exec : {Execution::Serial, Execution::Parallel}) {
    std::vector<int> hits(1000, 0);
    for_each_index(hits.size(), exec, [&](std::size_t i) { hits[i] += 1; });
    for (int h : hits) EXPECT_EQ(h, 1);
  }
}

TEST(ForEach, LowestFailingIndexIsRethrown) {
  for (auto exec : {Execution::Serial, Execution::Parallel}) {
    try {
      for_each_index(100, exec, [](std::size_t i) {
        if (i == 17 || i == 63) throw std::runtime_error(std::to_string(i));
      });
      FAIL();
    } catch (const std::runtime_error& e) {
      EXPECT_STREQ(e.what(), "17");
    }
  }
}

TEST(ForEach, WorkerCountCap) {
  const int before = worker_count();
  set_worker_count(1);
  EXPECT_EQ(worker_count(), 1);
  set_worker_count(before);
  EXPECT_GE(worker_count(), 1);
}

TEST(Kernels, SynthSerialEqualsParallel) {
  const auto a = synth_dataset(builtin_scenarios(), 3, SynthDriverParams{}, 8, Execution::Serial);
  const auto b = synth_dataset(builtin_scenarios(), 3, SynthDriverParams{}, 8, Execution::Parallel);
  ASSERT_EQ(a.size(), b.size());
  for (std::size_t i = 0; i < a.size(); ++i) EXPECT_EQ(format_trace(a[i]), format_trace(b[i]));
}

TEST(Kernels, LearningSerialEqualsParallel) {
  PipelineConfig cfg;
  testing::WarningCapture quiet;
  const auto traces = synth_dataset(builtin_scenarios(), 1, SynthDriverParams{}, 2);
  const auto segs = segment_and_classify(traces, cfg);
  const auto a = learn_all(segs, cfg, Execution::Serial);
  const auto b = learn_all(segs, cfg, Execution::Parallel);
  EXPECT_EQ(format_weights_csv(a), format_weights_csv(b));
  EXPECT_EQ(format_learn_trace_csv(a), format_learn_trace_csv(b));
  const auto da = learn_dirl(segs, cfg, Execution::Serial);
  const auto db = learn_dirl(segs, cfg, Execution::Parallel);
  EXPECT_EQ(format_weights_csv(da), format_weights_csv(db));
}

TEST(Kernels, RolloutSerialEqualsParallel) {
  PipelineConfig cfg;
  FixedWeights w;
  for (auto p : kAllPhases) w.weights[p] = WeightVector::ones(p);
  const auto sc = builtin_scenarios()[3];
  const auto a = rollout_batch(sc, w, cfg, 4, 6, Execution::Serial);
  const auto b = rollout_batch(sc, w, cfg, 4, 6, Execution::Parallel);
  for (std::size_t i = 0; i < a.size(); ++i) EXPECT_EQ(format_rollout(a[i]), format_rollout(b[i]));
}

}  // namespace
}  // namespace stochdrive
