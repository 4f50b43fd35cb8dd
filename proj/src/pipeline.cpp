#include "stochdrive/pipeline.hpp"

#include <set>

#include <fmt/format.h>

#include "stochdrive/errors.hpp"
#include "stochdrive/logging.hpp"
#include "stochdrive/phase.hpp"

namespace stochdrive {

std::vector<TrajectorySegment> segment_and_classify(
    const std::vector<LeaderFollowerTrace>& traces, const PipelineConfig& cfg) {
  std::vector<TrajectorySegment> out;
  for (const auto& tr : traces) {
    auto shared = std::make_shared<const LeaderFollowerTrace>(tr);
    try {
      auto segs = segment_trace(shared, cfg);
      out.insert(out.end(), segs.begin(), segs.end());
    } catch (const EmptyResultError& e) {
      warn(fmt::format("trace {} skipped: {}", tr.id, e.what()));
    }
  }
  classify_segments(out);
  return out;
}

WeightClusters clusters_of(const LearnedWeights& learned) {
  WeightClusters out;
  for (auto phase : kAllPhases) {
    auto c = learned.cluster(phase);
    if (!c.empty()) out[phase] = std::move(c);
  }
  return out;
}

FixedWeights fixed_weights_of(const std::map<PhaseLabel, LearnResult>& dirl) {
  FixedWeights out;
  for (const auto& [phase, r] : dirl) {
    WeightVector w = r.theta;
    w.segment_index = -1;
    out.weights[phase] = w;
  }
  return out;
}

WeightVector mean_weights(std::span<const WeightVector> cluster) {
  if (cluster.empty()) throw DomainError("mean of an empty cluster");
  WeightVector out = cluster.front();
  out.segment_index = -1;
  for (std::size_t i = 1; i < cluster.size(); ++i) {
    for (std::size_t j = 0; j < out.weights.size(); ++j) {
      out.weights.values[j] += cluster[i].weights.values[j];
    }
  }
  for (auto& v : out.weights.values) v /= static_cast<double>(cluster.size());
  return out;
}

CopulaSet fit_copulas(const WeightClusters& clusters, BandwidthRule rule) {
  CopulaSet out;
  for (const auto& [phase, weights] : clusters) {
    try {
      out.models[phase] = fit_copula(weights, rule);
    } catch (const FitError& e) {
      warn(fmt::format("no copula for cluster {}, using its mean weights: {}",
                       to_string(phase), e.what()));
      out.fallback[phase] = mean_weights(weights);
    }
  }
  if (out.models.empty() && out.fallback.empty()) {
    throw FitError("no weight clusters to fit");
  }
  return out;
}

GeneratedByScenario generate_all(const std::vector<ScenarioSpec>& scenarios,
                                 const WeightSource& source,
                                 const PipelineConfig& cfg, std::uint64_t seed,
                                 std::size_t n, Execution exec) {
  // Flattened (scenario, sample) jobs so small scenarios do not serialize.
  std::vector<RolloutResult> flat(scenarios.size() * n);
  for_each_index(flat.size(), exec, [&](std::size_t i) {
    flat[i] = rollout(scenarios[i / n], source, cfg, seed,
                      static_cast<long>(i % n));
  });
  GeneratedByScenario out;
  for (std::size_t s = 0; s < scenarios.size(); ++s) {
    auto& dst = out[scenarios[s].scenario_id];
    for (std::size_t k = 0; k < n; ++k) dst.push_back(std::move(flat[s * n + k]));
  }
  return out;
}

ObservedByScenario group_by_scenario(const std::vector<LeaderFollowerTrace>& traces) {
  ObservedByScenario out;
  for (const auto& t : traces) out[scenario_of_trace(t.id)].push_back(t);
  return out;
}

std::uint64_t stage_seed(std::uint64_t seed, std::string_view stage) {
  return derive_seed(seed, stage, 0);
}

ExperimentResult run_experiment(const ExperimentOptions& opts) {
  ExperimentResult r;
  const auto& cfg = opts.cfg;
  r.traces = synth_dataset(opts.scenarios, opts.trials, opts.driver,
                           stage_seed(opts.seed, "synth"), opts.exec);

  std::vector<std::string> ids;
  for (const auto& t : r.traces) ids.push_back(t.id);
  r.split = split_train_test(ids, opts.train_per_scenario,
                             stage_seed(opts.seed, "split"));
  std::set<std::string> train_ids;
  for (const auto& e : r.split) {
    if (e.split == Split::Train) train_ids.insert(e.trace_id);
  }
  std::vector<LeaderFollowerTrace> train, test;
  for (const auto& t : r.traces) {
    (train_ids.contains(t.id) ? train : test).push_back(t);
  }

  r.train_segments = segment_and_classify(train, cfg);
  r.learned = learn_all(r.train_segments, cfg, opts.exec);
  r.dirl = learn_dirl(r.train_segments, cfg, opts.exec);
  r.copulas = fit_copulas(clusters_of(r.learned));

  const auto gen_seed = stage_seed(opts.seed, "generate");
  const auto n = static_cast<std::size_t>(cfg.rollout_samples);
  r.sirl_rollouts = generate_all(opts.scenarios, r.copulas, cfg, gen_seed, n, opts.exec);
  r.dirl_rollouts = generate_all(opts.scenarios, fixed_weights_of(r.dirl), cfg,
                                 gen_seed, n, opts.exec);

  const auto observed = group_by_scenario(test);
  r.report.sirl = evaluate(observed, r.sirl_rollouts);
  r.report.dirl = evaluate(observed, r.dirl_rollouts);
  return r;
}

namespace {
void write_rollouts(const GeneratedByScenario& g, const std::filesystem::path& dir) {
  for (const auto& [id, samples] : g) {
    for (const auto& s : samples) {
      write_text_file(dir / id / fmt::format("sample_{:03}.csv", s.sample_id),
                      format_rollout(s));
    }
  }
}
}  // namespace

void write_experiment(const ExperimentResult& r, const std::filesystem::path& dir) {
  for (const auto& t : r.traces) write_trace(dir / "data" / (t.id + ".csv"), t);
  write_text_file(dir / "split.csv", format_split_manifest(r.split));
  write_text_file(dir / "model" / "weights.csv", format_weights_csv(r.learned));
  write_text_file(dir / "model" / "learn_trace.csv", format_learn_trace_csv(r.learned));
  write_text_file(dir / "model" / "segments.csv",
                  format_segment_manifest(r.learned, r.train_segments));
  write_text_file(dir / "model_dirl" / "weights.csv", format_weights_csv(r.dirl));
  write_text_file(dir / "model_dirl" / "learn_trace.csv", format_learn_trace_csv(r.dirl));
  for (const auto& [phase, m] : r.copulas.models) {
    save_copula(dir / "model" / "copula" / fmt::format("{}.copula", to_string(phase)), m);
  }
  write_rollouts(r.sirl_rollouts, dir / "generated" / "sirl");
  write_rollouts(r.dirl_rollouts, dir / "generated" / "dirl");
  write_text_file(dir / "report" / "eval.csv", format_report_csv(r.report));
  write_text_file(dir / "report" / "eval.txt", format_report_table(r.report));
}

}  // namespace stochdrive
