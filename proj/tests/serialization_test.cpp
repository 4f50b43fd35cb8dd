#include <algorithm>
#include <fstream>
#include <map>
#include <set>

#include <gtest/gtest.h>

#include "stochdrive/errors.hpp"
#include "stochdrive/phase.hpp"
#include "stochdrive/pipeline.hpp"
#include "stochdrive/serialization.hpp"
#include "test_util.hpp"

namespace stochdrive {
namespace {

LearnedWeights fake_learned() {
  LearnedWeights lw;
  for (int i = 0; i < 5; ++i) {
    SegmentLearnOutcome o;
    o.global_index = i;
    o.trace_id = "cruise__trial_00" + std::to_string(i);
    o.segment_index = i;
    o.phase = kAllPhases[static_cast<std::size_t>(i) % 3];
    if (i == 4) {
      o.error = "boom";
    } else {
      LearnResult r;
      r.theta = WeightVector::ones(o.phase, i);
      for (std::size_t j = 0; j < r.theta.weights.size(); ++j) {
        r.theta.weights.values[j] = 0.1 * (i + 1) + 0.01 * j - 0.3;
      }
      r.trace = {{1, 0.5, r.theta.weights.values, 0.2}, {2, 0.005, r.theta.weights.values, 0.2}};
      r.converged = true;
      r.final_grad_norm = 0.005;
      o.result = r;
    }
    lw.segments.push_back(o);
  }
  return lw;
}

TEST(Weights, CsvRoundTripGroupsByCluster) {
  const auto lw = fake_learned();
  const auto csv = format_weights_csv(lw);
  EXPECT_EQ(csv.substr(0, csv.find('\n')), kWeightsHeader);
  const auto back = parse_weights_csv(csv);
  for (auto p : kAllPhases) {
    const auto want = lw.cluster(p);
    const auto it = back.find(p);
    ASSERT_NE(it, back.end());
    ASSERT_EQ(it->second.size(), want.size());
    for (std::size_t i = 0; i < want.size(); ++i) {
      EXPECT_EQ(it->second[i].weights, want[i].weights);
      EXPECT_EQ(it->second[i].segment_index, want[i].segment_index);
    }
  }
  // Failed segments never reach the file.
  EXPECT_EQ(csv.find(",4,"), std::string::npos);
}

TEST(Weights, DirlRowsUseMinusOne) {
  std::map<PhaseLabel, LearnResult> dirl;
  dirl[PhaseLabel::FreeMotion].theta = WeightVector::ones(PhaseLabel::FreeMotion);
  const auto back = parse_weights_csv(format_weights_csv(dirl));
  ASSERT_EQ(back.at(PhaseLabel::FreeMotion).size(), 1u);
  EXPECT_EQ(back.at(PhaseLabel::FreeMotion)[0].segment_index, -1);
}

TEST(Weights, BadRowsRejected) {
  const std::string h = std::string(kWeightsHeader) + "\n";
  EXPECT_THROW(parse_weights_csv(h + "nowhere,0,f_a,1\n"), IngestionError);
  EXPECT_THROW(parse_weights_csv(h + "free,0,f_zz,1\n"), IngestionError);
  EXPECT_THROW(parse_weights_csv(h + "free,0,f_a,1\nfree,0,f_ds,1\n"), IngestionError);
  EXPECT_THROW(parse_weights_csv(h + "free,0,f_a,x\n"), IngestionError);
}

TEST(LearnTrace, CsvHasOneRowPerEpoch) {
  const auto csv = format_learn_trace_csv(fake_learned());
  EXPECT_EQ(csv.substr(0, csv.find('\n')), kLearnTraceHeader);
  EXPECT_EQ(std::count(csv.begin(), csv.end(), '\n'), 1 + 4 * 2);
  std::map<PhaseLabel, LearnResult> dirl;
  dirl[PhaseLabel::SteadyFollowing] = fake_learned().segments[0].result.value();
  const auto d = format_learn_trace_csv(dirl);
  EXPECT_EQ(d.substr(0, d.find('\n')), kDirlTraceHeader);
  EXPECT_NE(d.find("\nsteady,1,"), std::string::npos);
}

std::vector<std::string> ids(int scenarios, int trials) {
  std::vector<std::string> out;
  for (int s = 0; s < scenarios; ++s) {
    for (int t = 0; t < trials; ++t) out.push_back(trace_id("sc" + std::to_string(s), t));
  }
  return out;
}

TEST(Split, PerScenarioCountsSeededAndSorted) {
  const auto all = ids(9, 30);
  const auto a = split_train_test(all, 25, 4);
  ASSERT_EQ(a.size(), all.size());
  std::map<std::string, int> train, test;
  for (const auto& e : a) (e.split == Split::Train ? train : test)[e.scenario_id]++;
  for (int s = 0; s < 9; ++s) {
    EXPECT_EQ(train["sc" + std::to_string(s)], 25);
    EXPECT_EQ(test["sc" + std::to_string(s)], 5);
  }
  EXPECT_TRUE(std::is_sorted(a.begin(), a.end(),
                             [](auto& x, auto& y) { return x.trace_id < y.trace_id; }));
  auto shuffled = all;
  std::reverse(shuffled.begin(), shuffled.end());
  const auto b = split_train_test(shuffled, 25, 4);
  for (std::size_t i = 0; i < a.size(); ++i) EXPECT_EQ(a[i].split, b[i].split);
  const auto c = split_train_test(all, 25, 5);
  bool differs = false;
  for (std::size_t i = 0; i < a.size(); ++i) differs |= a[i].split != c[i].split;
  EXPECT_TRUE(differs);
}

TEST(Split, ManifestRoundTripAndNoTestWarning) {
  const auto a = split_train_test(ids(2, 6), 3, 1);
  const auto text = format_split_manifest(a);
  EXPECT_EQ(text.substr(0, text.find('\n')), kSplitHeader);
  const auto back = parse_split_manifest(text);
  ASSERT_EQ(back.size(), a.size());
  for (std::size_t i = 0; i < a.size(); ++i) {
    EXPECT_EQ(back[i].trace_id, a[i].trace_id);
    EXPECT_EQ(back[i].split, a[i].split);
  }
  testing::WarningCapture w;
  const auto all_train = split_train_test(ids(1, 4), 10, 1);
  for (const auto& e : all_train) EXPECT_EQ(e.split, Split::Train);
  EXPECT_EQ(w.messages.size(), 1u);
}

TEST(Files, WriteCreatesParentsAndTraceDirIsSorted) {
  testing::TempDir dir("ser");
  write_text_file(dir.path / "a" / "b" / "x.txt", "hello\n");
  EXPECT_EQ(read_text_file(dir.path / "a" / "b" / "x.txt"), "hello\n");
  for (const char* id : {"z", "m", "a"}) {
    write_trace(dir.path / "traces" / (std::string(id) + ".csv"),
                testing::constant_trace(40, 0.1, 10, 10, 20, id));
  }
  write_text_file(dir.path / "traces" / "notes.txt", "ignored");
  const auto traces = read_trace_dir(dir.path / "traces");
  ASSERT_EQ(traces.size(), 3u);
  EXPECT_EQ(traces[0].id, "a");
  EXPECT_EQ(traces[2].id, "z");
  EXPECT_THROW(read_text_file(dir.path / "missing.txt"), Error);
}

TEST(Manifest, SegmentManifestListsEverySegment) {
  auto tr = std::make_shared<const LeaderFollowerTrace>(
      testing::constant_trace(151, 0.1, 10, 10, 20, "cruise__trial_000"));
  auto segs = segment_trace(tr, PipelineConfig{});
  classify_segments(segs);
  const auto lw = fake_learned();
  const auto text = format_segment_manifest(lw, segs);
  EXPECT_EQ(text.substr(0, text.find('\n')), kSegmentManifestHeader);
  EXPECT_EQ(std::count(text.begin(), text.end(), '\n'), 6);
  EXPECT_NE(text.find("boom"), std::string::npos);
}

TEST(Pipeline, MeanWeightsAndFallbackCopulas) {
  std::vector<WeightVector> c;
  for (int i = 0; i < 4; ++i) {
    auto w = WeightVector::ones(PhaseLabel::FreeMotion, i);
    w.weights.values = {1.0 * i, 2.0, -1.0 * i};
    c.push_back(w);
  }
  const auto m = mean_weights(c);
  EXPECT_EQ(m.segment_index, -1);
  EXPECT_EQ(m.weights.values, (std::vector<double>{1.5, 2.0, -1.5}));

  testing::WarningCapture w;
  WeightClusters clusters{{PhaseLabel::FreeMotion, c}};
  const auto set = fit_copulas(clusters);
  EXPECT_TRUE(set.models.empty());
  EXPECT_EQ(set.fallback.at(PhaseLabel::FreeMotion), m);
  EXPECT_FALSE(w.messages.empty());
  EXPECT_THROW(fit_copulas({}), Error);
}

}  // namespace
}  // namespace stochdrive
