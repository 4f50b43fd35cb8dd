#include "stochdrive/config.hpp"

#include <fstream>

#include <gtest/gtest.h>

#include "stochdrive/errors.hpp"
#include "test_util.hpp"

namespace stochdrive {
namespace {

TEST(Config, EmptyTextGivesDefaults) {
  const auto cfg = parse_config("");
  EXPECT_EQ(cfg.segment_len, 3.0);
  EXPECT_EQ(cfg.subsegment_len, 1.0);
  EXPECT_EQ(cfg.sample_time, 0.1);
  EXPECT_EQ(cfg.safe_gap, 5.0);
  EXPECT_EQ(cfg.lr_initial, 0.2);
  EXPECT_EQ(cfg.lr_halve_every_epochs, 5);
  EXPECT_EQ(cfg.v_min, 0.0);
  EXPECT_EQ(cfg.v_max, SpeedLimitPolicy::max_of_leader());
  EXPECT_EQ(cfg.rollout_samples, 50);
  EXPECT_EQ(cfg.max_epochs, 100);
  EXPECT_EQ(cfg.grad_norm_tol, 1e-2);
  EXPECT_FALSE(cfg.rng_seed.has_value());
  EXPECT_EQ(cfg, PipelineConfig{});
}

TEST(Config, DefaultsSatisfyInvariants) {
  PipelineConfig cfg;
  EXPECT_NO_THROW(cfg.validate());
  EXPECT_EQ(cfg.subsegments_per_segment(), 3);
  EXPECT_EQ(cfg.steps_per_subsegment(), 10);
  EXPECT_EQ(cfg.steps_per_segment(), 30);
}

TEST(Config, NonIntegerSegmentRatioIsValidationError) {
  EXPECT_THROW(parse_config("segment_len_TH = 2.5\nsubsegment_len_Tp = 1\n"),
               ValidationError);
}

TEST(Config, StepsPerSubsegment) {
  const auto cfg = parse_config("subsegment_len_Tp = 0.5\nsample_time_Ts = 0.1\n");
  EXPECT_EQ(cfg.steps_per_subsegment(), 5);
  EXPECT_EQ(cfg.subsegments_per_segment(), 6);
}

TEST(Config, UnknownKeyNamesTheKey) {
  try {
    parse_config("segment_len = 3\n");
    FAIL() << "expected ConfigError";
  } catch (const ConfigError& e) {
    EXPECT_NE(std::string(e.what()).find("segment_len"), std::string::npos);
  }
}

TEST(Config, BadValueNamesTheKey) {
  try {
    parse_config("safe_gap_ds = five\n");
    FAIL() << "expected ConfigError";
  } catch (const ConfigError& e) {
    EXPECT_NE(std::string(e.what()).find("safe_gap_ds"), std::string::npos);
  }
}

TEST(Config, DuplicateKeyAndMissingEquals) {
  EXPECT_THROW(parse_config("v_min = 1\nv_min = 2\n"), ConfigError);
  EXPECT_THROW(parse_config("v_min 1\n"), ConfigError);
}

TEST(Config, InvariantViolations) {
  EXPECT_THROW(parse_config("lr_initial_eta = 0\n"), ValidationError);
  EXPECT_THROW(parse_config("safe_gap_ds = -1\n"), ValidationError);
  EXPECT_THROW(parse_config("v_min = -0.5\n"), ValidationError);
  EXPECT_THROW(parse_config("subsegment_len_Tp = 0.25\n"), ValidationError);
}

TEST(Config, SpeedPolicyParsing) {
  EXPECT_EQ(parse_config("v_max_policy = 33.5\n").v_max,
            SpeedLimitPolicy::fixed(33.5));
  EXPECT_EQ(parse_config("v_max_policy = max_of_leader\n").v_max,
            SpeedLimitPolicy::max_of_leader());
  EXPECT_THROW(parse_config("v_max_policy = fastest\n"), ConfigError);
}

TEST(Config, CommentsAndSeed) {
  const auto cfg = parse_config("# tuned\n\nrng_seed = 42\n  max_epochs = 7  \n");
  ASSERT_TRUE(cfg.rng_seed.has_value());
  EXPECT_EQ(*cfg.rng_seed, 42u);
  EXPECT_EQ(cfg.max_epochs, 7);
}

TEST(Config, LearningRateSchedule) {
  PipelineConfig cfg;
  for (int e = 1; e <= 5; ++e) EXPECT_EQ(cfg.learning_rate(e), 0.2);
  for (int e = 6; e <= 10; ++e) EXPECT_EQ(cfg.learning_rate(e), 0.1);
  EXPECT_EQ(cfg.learning_rate(11), 0.05);
  EXPECT_EQ(cfg.learning_rate(26), 0.2 / 32);
}

TEST(Config, RoundTripAndDeterminism) {
  auto cfg = parse_config(
      "segment_len_TH = 4\nsubsegment_len_Tp = 0.5\nv_max_policy = 20\n"
      "rng_seed = 9\naccel_min = -5.5\n");
  EXPECT_EQ(parse_config(to_string(cfg)), cfg);
  EXPECT_EQ(to_string(parse_config(to_string(cfg))), to_string(cfg));
  EXPECT_EQ(parse_config(to_string(PipelineConfig{})), PipelineConfig{});
}

TEST(Config, LoadFromFile) {
  testing::TempDir dir("config");
  const auto path = dir.path / "c.cfg";
  { std::ofstream(path) << "safe_gap_ds = 6\n"; }
  EXPECT_EQ(load_config(path).safe_gap, 6.0);
  EXPECT_EQ(load_config(path), load_config(path));
  EXPECT_THROW(load_config(dir.path / "missing.cfg"), ConfigError);
}

TEST(Config, RenderingListsEveryKey) {
  PipelineConfig cfg;
  cfg.rng_seed = 3;
  const auto text = to_string(cfg);
  for (const auto& key : config_keys()) {
    EXPECT_NE(text.find(key + " ="), std::string::npos) << key;
  }
}

}  // namespace
}  // namespace stochdrive
