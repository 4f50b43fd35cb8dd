#include "cli.hpp"

#include <algorithm>
#include <filesystem>
#include <map>
#include <optional>
#include <ostream>
#include <set>

#include <CLI11.hpp>
#include <fmt/format.h>
#include <fmt/ostream.h>

#include "stochdrive/config.hpp"
#include "stochdrive/copula.hpp"
#include "stochdrive/errors.hpp"
#include "stochdrive/features.hpp"
#include "stochdrive/learner.hpp"
#include "stochdrive/logging.hpp"
#include "stochdrive/metrics.hpp"
#include "stochdrive/nmpc.hpp"
#include "stochdrive/parallel.hpp"
#include "stochdrive/phase.hpp"
#include "stochdrive/pipeline.hpp"
#include "stochdrive/serialization.hpp"
#include "stochdrive/synth.hpp"

namespace fs = std::filesystem;

namespace stochdrive::cli {
namespace {

constexpr std::string_view kFallbackFile = "fallback_weights.csv";

// Options every subcommand accepts: config file, seed, worker cap and one
// flag per config key.
struct Common {
  std::string config_path;
  std::optional<std::uint64_t> seed;
  int jobs = 0;
  std::map<std::string, std::string> overrides;
  std::map<std::string, CLI::Option*> override_opts;

  void attach(CLI::App* app) {
    app->add_option("--config", config_path, "key=value config file");
    app->add_option("--seed", seed, "RNG seed (overrides rng_seed)");
    app->add_option("--jobs", jobs, "maximum worker threads (0 = all)")
        ->check(CLI::NonNegativeNumber);
    for (const auto& key : config_keys()) {
      override_opts[key] =
          app->add_option("--" + key, overrides[key], "config override");
    }
  }

  PipelineConfig config() {
    PipelineConfig cfg;
    if (!config_path.empty()) cfg = load_config(config_path);
    for (const auto& [key, opt] : override_opts) {
      if (opt->count() > 0) apply_config_value(cfg, key, overrides[key]);
    }
    cfg.validate();
    if (seed) cfg.rng_seed = seed;
    if (jobs > 0) set_worker_count(jobs);
    return cfg;
  }
};

std::uint64_t require_seed(const PipelineConfig& cfg, std::string_view cmd) {
  if (!cfg.rng_seed) {
    throw ValidationError(fmt::format(
        "{} is stochastic: pass --seed or set rng_seed in the config", cmd));
  }
  return *cfg.rng_seed;
}

std::vector<ScenarioSpec> load_scenario_dir(const fs::path& dir) {
  std::vector<fs::path> files;
  for (const auto& e : fs::directory_iterator(dir)) {
    if (e.is_regular_file() && e.path().extension() == ".scenario") {
      files.push_back(e.path());
    }
  }
  std::sort(files.begin(), files.end());
  std::vector<ScenarioSpec> out;
  for (const auto& f : files) out.push_back(load_scenario(f));
  if (out.empty()) {
    throw ValidationError(fmt::format("no .scenario files in {}", dir.string()));
  }
  return out;
}

// Names are built-in scenario ids, "all", or scenario file paths.
std::vector<ScenarioSpec> resolve_scenarios(const std::vector<std::string>& names,
                                            const std::string& dir) {
  if (!dir.empty()) return load_scenario_dir(dir);
  const auto builtin = builtin_scenarios();
  if (names.empty()) return builtin;
  std::vector<ScenarioSpec> out;
  for (const auto& name : names) {
    if (name == "all") {
      out.insert(out.end(), builtin.begin(), builtin.end());
      continue;
    }
    const auto it = std::find_if(builtin.begin(), builtin.end(),
                                 [&](const auto& s) { return s.scenario_id == name; });
    if (it != builtin.end()) {
      out.push_back(*it);
    } else if (fs::is_regular_file(name)) {
      out.push_back(load_scenario(name));
    } else {
      throw ValidationError(fmt::format("unknown scenario '{}'", name));
    }
  }
  return out;
}

std::vector<LeaderFollowerTrace> load_observed(const std::string& dir,
                                               const std::string& split_path) {
  auto traces = read_trace_dir(dir);
  if (split_path.empty()) return traces;
  std::set<std::string> test;
  for (const auto& e : parse_split_manifest(read_text_file(split_path))) {
    if (e.split == Split::Test) test.insert(e.trace_id);
  }
  std::erase_if(traces, [&](const auto& t) { return !test.contains(t.id); });
  return traces;
}

GeneratedByScenario load_generated(const fs::path& dir) {
  if (!fs::is_directory(dir)) {
    throw IngestionError(fmt::format("{} is not a directory", dir.string()));
  }
  GeneratedByScenario out;
  for (const auto& sub : fs::directory_iterator(dir)) {
    if (!sub.is_directory()) continue;
    std::vector<fs::path> files;
    for (const auto& f : fs::directory_iterator(sub.path())) {
      if (f.path().extension() == ".csv") files.push_back(f.path());
    }
    std::sort(files.begin(), files.end());
    auto& dst = out[sub.path().filename().string()];
    for (const auto& f : files) dst.push_back(parse_rollout(read_text_file(f)));
  }
  return out;
}

// ---- synth ----------------------------------------------------------------

struct SynthCmd {
  Common common;
  std::string out_dir;
  std::string scenario_dir;
  std::string driver_path;
  int trials = 30;

  void attach(CLI::App* app) {
    common.attach(app);
    app->add_option("--out", out_dir, "output directory")->required();
    app->add_option("--trials", trials, "trials per scenario")
        ->check(CLI::PositiveNumber);
    app->add_option("--scenarios", scenario_dir,
                    "directory of .scenario files (default: built-in set)");
    app->add_option("--driver", driver_path, "driver parameter file");
  }

  int run(std::ostream& out) {
    const auto cfg = common.config();
    const auto seed = require_seed(cfg, "synth");
    const auto scenarios = resolve_scenarios({}, scenario_dir);
    SynthDriverParams driver;
    if (!driver_path.empty()) driver = load_driver_params(driver_path);
    driver.sample_time = cfg.sample_time;
    driver.validate();
    const auto traces = synth_dataset(scenarios, trials, driver, seed);
    for (const auto& t : traces) write_trace(fs::path(out_dir) / (t.id + ".csv"), t);
    for (const auto& s : scenarios) {
      write_text_file(fs::path(out_dir) / "scenarios" / (s.scenario_id + ".scenario"),
                      to_string(s));
    }
    fmt::print(out, "wrote {} traces ({} scenarios x {} trials) to {}\n",
               traces.size(), scenarios.size(), trials, out_dir);
    return 0;
  }
};

// ---- segment --------------------------------------------------------------

struct SegmentCmd {
  Common common;
  std::string in_dir;
  std::string out_path;

  void attach(CLI::App* app) {
    common.attach(app);
    app->add_option("--in", in_dir, "trace directory")->required();
    app->add_option("--out", out_path, "segment CSV")->required();
  }

  int run(std::ostream& out) {
    const auto cfg = common.config();
    const auto segs = segment_and_classify(read_trace_dir(in_dir), cfg);
    std::string csv =
        "segment_id,trace_id,trace_segment,start_t,mean_speed,mean_gap,"
        "mean_thw,mean_ttci,phase\n";
    std::map<PhaseLabel, int> counts;
    for (std::size_t i = 0; i < segs.size(); ++i) {
      const auto& s = segs[i];
      const auto ind = headway_indicators(s.window());
      csv += fmt::format("{},{},{},{},{},{},{},{},{}\n", i, s.trace->id,
                         s.segment_index, s.start_time(), ind.mean_speed,
                         ind.mean_gap, ind.mean_thw, ind.mean_ttci,
                         to_string(*s.phase));
      ++counts[*s.phase];
    }
    write_text_file(out_path, csv);
    fmt::print(out, "{} segments:", segs.size());
    for (auto p : kAllPhases) fmt::print(out, " {}={}", to_string(p), counts[p]);
    fmt::print(out, "\n");
    return 0;
  }
};

// ---- learn ----------------------------------------------------------------

struct LearnCmd {
  Common common;
  std::string in_dir;
  std::string out_dir;
  std::string split = "25/5";
  bool dirl = false;

  void attach(CLI::App* app) {
    common.attach(app);
    app->add_option("--in", in_dir, "trace directory")->required();
    app->add_option("--out", out_dir, "model directory")->required();
    app->add_option("--split", split,
                    "TRAIN/TEST traces per scenario, or 'none' to learn from all")
        ->capture_default_str();
    app->add_flag("--dirl", dirl, "learn one weight vector per phase (baseline)");
  }

  int run(std::ostream& out) {
    const auto cfg = common.config();
    auto traces = read_trace_dir(in_dir);
    const fs::path dir(out_dir);
    if (split != "none") {
      const auto slash = split.find('/');
      if (slash == std::string::npos) {
        throw ValidationError(fmt::format("--split '{}': expected TRAIN/TEST", split));
      }
      const auto train = parse_uint(split.substr(0, slash), "--split");
      const auto test = parse_uint(split.substr(slash + 1), "--split");
      std::vector<std::string> ids;
      for (const auto& t : traces) ids.push_back(t.id);
      const auto entries = split_train_test(ids, train, stage_seed(require_seed(cfg, "learn --split"), "split"));
      std::map<std::string, std::size_t> per_scenario;
      for (const auto& e : entries) ++per_scenario[e.scenario_id];
      for (const auto& [sc, n] : per_scenario) {
        if (n != train + test) {
          warn(fmt::format("split {}: scenario {} has {} traces", split, sc, n));
        }
      }
      write_text_file(dir / "split.csv", format_split_manifest(entries));
      std::set<std::string> train_ids;
      for (const auto& e : entries) {
        if (e.split == Split::Train) train_ids.insert(e.trace_id);
      }
      std::erase_if(traces, [&](const auto& t) { return !train_ids.contains(t.id); });
    }
    const auto segs = segment_and_classify(traces, cfg);
    if (segs.empty()) throw EmptyResultError("no segments to learn from");

    if (dirl) {
      const auto res = learn_dirl(segs, cfg);
      if (res.empty()) throw EmptyResultError("no phase cluster could be learned");
      write_text_file(dir / "weights.csv", format_weights_csv(res));
      write_text_file(dir / "learn_trace.csv", format_learn_trace_csv(res));
      for (const auto& [phase, r] : res) {
        fmt::print(out, "{}: {} epochs, |grad| {:.4g}{}\n", to_string(phase),
                   r.trace.size(), r.final_grad_norm,
                   r.converged ? "" : " (not converged)");
      }
      return 0;
    }
    const auto learned = learn_all(segs, cfg);
    std::size_t ok = 0, converged = 0;
    for (const auto& s : learned.segments) {
      if (s.result) {
        ++ok;
        converged += s.result->converged ? 1 : 0;
      }
    }
    if (ok == 0) throw EmptyResultError("every segment failed to learn");
    write_text_file(dir / "weights.csv", format_weights_csv(learned));
    write_text_file(dir / "learn_trace.csv", format_learn_trace_csv(learned));
    write_text_file(dir / "segments.csv", format_segment_manifest(learned, segs));
    fmt::print(out, "learned {} of {} segments ({} converged)\n", ok, segs.size(),
               converged);
    return 0;
  }
};

// ---- fit-copula -----------------------------------------------------------

struct FitCopulaCmd {
  Common common;
  std::string in_path;
  std::string out_dir;
  std::string bandwidth = "silverman";

  void attach(CLI::App* app) {
    common.attach(app);
    app->add_option("--in", in_path, "weights CSV from learn")->required();
    app->add_option("--out", out_dir, "copula model directory")->required();
    app->add_option("--bandwidth", bandwidth, "silverman or scott")
        ->check(CLI::IsMember({"silverman", "scott"}))
        ->capture_default_str();
  }

  int run(std::ostream& out) {
    common.config();
    const auto rule =
        bandwidth == "scott" ? BandwidthRule::Scott : BandwidthRule::Silverman;
    const auto clusters = parse_weights_csv(read_text_file(in_path));
    const auto set = fit_copulas(clusters, rule);
    const fs::path dir(out_dir);
    for (const auto& [phase, m] : set.models) {
      save_copula(dir / fmt::format("{}.copula", to_string(phase)), m);
      fmt::print(out, "{}: {} vectors, dof {}\n", to_string(phase),
                 clusters.at(phase).size(), m.dof);
    }
    if (!set.fallback.empty()) {
      std::string csv(kWeightsHeader);
      csv += '\n';
      for (const auto& [phase, w] : set.fallback) {
        const auto feats = w.weights.features();
        for (std::size_t j = 0; j < feats.size(); ++j) {
          csv += fmt::format("{},-1,{},{}\n", to_string(phase),
                             to_string(feats[j]), w.weights.values[j]);
        }
        fmt::print(out, "{}: mean weights only\n", to_string(phase));
      }
      write_text_file(dir / kFallbackFile, csv);
    }
    return 0;
  }
};

// ---- generate -------------------------------------------------------------

WeightSource load_source(const fs::path& model, bool dirl) {
  if (dirl) {
    const auto file = fs::is_directory(model) ? model / "weights.csv" : model;
    FixedWeights fixed;
    for (const auto& [phase, ws] : parse_weights_csv(read_text_file(file))) {
      if (ws.size() != 1) {
        throw ValidationError(fmt::format(
            "{}: cluster {} has {} weight vectors; expected one (learn --dirl)",
            file.string(), to_string(phase), ws.size()));
      }
      fixed.weights[phase] = ws.front();
    }
    if (fixed.weights.empty()) throw ValidationError("no baseline weights");
    return fixed;
  }
  if (!fs::is_directory(model)) {
    throw IngestionError(fmt::format("{} is not a directory", model.string()));
  }
  CopulaSet set;
  for (const auto& e : fs::directory_iterator(model)) {
    if (e.path().extension() == ".copula") {
      auto m = load_copula(e.path());
      set.models[m.phase] = std::move(m);
    }
  }
  if (fs::exists(model / kFallbackFile)) {
    for (const auto& [phase, ws] :
         parse_weights_csv(read_text_file(model / kFallbackFile))) {
      set.fallback[phase] = ws.front();
    }
  }
  if (set.models.empty() && set.fallback.empty()) {
    throw IngestionError(fmt::format("no copula models in {}", model.string()));
  }
  return set;
}

struct GenerateCmd {
  Common common;
  std::string model;
  std::vector<std::string> scenarios;
  std::string scenario_dir;
  std::string out_dir = "generated";
  int n = 0;
  bool dirl = false;

  void attach(CLI::App* app) {
    common.attach(app);
    app->add_option("--model", model,
                    "copula directory, or baseline weights with --dirl")
        ->required();
    app->add_option("--scenario", scenarios,
                    "built-in scenario id, scenario file, or 'all' (repeatable)");
    app->add_option("--scenarios", scenario_dir, "directory of .scenario files");
    app->add_option("--n", n, "samples per scenario (default: config)")
        ->check(CLI::PositiveNumber);
    app->add_option("--out", out_dir, "output directory")->capture_default_str();
    app->add_flag("--dirl", dirl, "use the single baseline weight vector per phase");
  }

  int run(std::ostream& out) {
    const auto cfg = common.config();
    // The baseline draws nothing at random; its seed only names samples.
    const std::uint64_t seed = dirl ? cfg.rng_seed.value_or(0)
                                    : require_seed(cfg, "generate");
    const auto source = load_source(model, dirl);
    const auto specs = resolve_scenarios(scenarios, scenario_dir);
    const auto count = static_cast<std::size_t>(n > 0 ? n : cfg.rollout_samples);
    const auto gen = generate_all(specs, source, cfg, stage_seed(seed, "generate"),
                                  count, Execution::Parallel);
    for (const auto& [id, samples] : gen) {
      int flagged = 0;
      for (const auto& s : samples) {
        write_text_file(fs::path(out_dir) / id /
                            fmt::format("sample_{:03}.csv", s.sample_id),
                        format_rollout(s));
        flagged += s.flagged() ? 1 : 0;
      }
      fmt::print(out, "{}: {} samples ({} with forced braking)\n", id,
                 samples.size(), flagged);
    }
    return 0;
  }
};

// ---- eval -----------------------------------------------------------------

struct EvalCmd {
  Common common;
  std::string observed;
  std::string split;
  std::string generated;
  std::string out_path;
  bool dirl = false;

  void attach(CLI::App* app) {
    common.attach(app);
    app->add_option("--observed", observed, "trace directory")->required();
    app->add_option("--split", split, "split manifest; keeps only test traces");
    app->add_option("--generated", generated, "rollout directory from generate")
        ->required();
    app->add_option("--out", out_path, "score CSV");
    app->add_flag("--dirl", dirl, "label the scores as the baseline");
  }

  int run(std::ostream& out) {
    common.config();
    const auto score = evaluate(group_by_scenario(load_observed(observed, split)),
                                load_generated(generated));
    if (score.scenarios.empty()) throw EmptyResultError("no scenario could be scored");
    const std::string mode = dirl ? "dirl" : "sirl";
    std::string csv = "mode,scenario_id,n_observed,n_samples,speed_rmse,accel_rmse\n";
    for (const auto& s : score.scenarios) {
      csv += fmt::format("{},{},{},{},{},{}\n", mode, s.scenario_id,
                         s.observed_traces, s.generated_samples, s.speed_rmse,
                         s.accel_rmse);
      fmt::print(out, "{:<20} speed {:.3f}  accel {:.3f}\n", s.scenario_id,
                 s.speed_rmse, s.accel_rmse);
    }
    csv += fmt::format("{},overall,,,{},{}\n", mode, score.speed_rmse, score.accel_rmse);
    fmt::print(out, "{:<20} speed {:.3f}  accel {:.3f}\n", "overall",
               score.speed_rmse, score.accel_rmse);
    if (!out_path.empty()) write_text_file(out_path, csv);
    return 0;
  }
};

// ---- report ---------------------------------------------------------------

struct ReportCmd {
  Common common;
  std::string observed;
  std::string split;
  std::string sirl;
  std::string dirl;
  std::vector<std::string> learn_traces;
  std::string out_dir;

  void attach(CLI::App* app) {
    common.attach(app);
    app->add_option("--observed", observed, "trace directory")->required();
    app->add_option("--split", split, "split manifest; keeps only test traces");
    app->add_option("--sirl", sirl, "stochastic-model rollout directory")->required();
    app->add_option("--dirl", dirl, "baseline rollout directory")->required();
    app->add_option("--learn-trace", learn_traces,
                    "learn_trace.csv files to bundle as gradient curves");
    app->add_option("--out", out_dir, "report directory")->required();
  }

  int run(std::ostream& out) {
    common.config();
    const auto obs = group_by_scenario(load_observed(observed, split));
    const auto gen_sirl = load_generated(sirl);
    const auto gen_dirl = load_generated(dirl);
    EvalReport report{evaluate(obs, gen_sirl), evaluate(obs, gen_dirl)};
    const fs::path dir(out_dir);
    write_text_file(dir / "eval.csv", format_report_csv(report));
    const auto table = format_report_table(report);
    write_text_file(dir / "eval.txt", table);
    for (const auto& [label, gen] :
         {std::pair{"sirl", &gen_sirl}, std::pair{"dirl", &gen_dirl}}) {
      for (const auto& [id, samples] : *gen) {
        const auto it = obs.find(id);
        const std::span<const LeaderFollowerTrace> o =
            it == obs.end() ? std::span<const LeaderFollowerTrace>{} : it->second;
        write_text_file(dir / "fans" / fmt::format("{}_{}.csv", id, label),
                        format_fan_csv(o, samples));
      }
    }
    for (const auto& path : learn_traces) {
      const fs::path p(path);
      const auto name = p.parent_path().filename().string();
      write_text_file(dir / "gradients" / fmt::format("{}_{}", name.empty() ? "model" : name,
                                                      p.filename().string()),
                      read_text_file(p));
    }
    out << table;
    return 0;
  }
};

// ---- phase-inspect --------------------------------------------------------

struct PhaseInspectCmd {
  Common common;
  std::string in_dir;
  std::string out_path;
  int k = 2;

  void attach(CLI::App* app) {
    common.attach(app);
    app->add_option("--in", in_dir, "trace directory")->required();
    app->add_option("--out", out_path, "scatter CSV")->required();
    app->add_option("--k", k, "number of clusters")->check(CLI::PositiveNumber);
  }

  int run(std::ostream& out) {
    const auto cfg = common.config();
    const auto seed = require_seed(cfg, "phase-inspect");
    const auto segs = segment_and_classify(read_trace_dir(in_dir), cfg);
    std::vector<SpeedGapPoint> pts;
    for (const auto& s : segs) {
      const auto ind = headway_indicators(s.window());
      pts.push_back({ind.mean_speed, ind.mean_gap});
    }
    const auto km = kmeans_speed_gap(pts, k, stage_seed(seed, "kmeans"));
    std::string csv = "segment_id,mean_speed,mean_gap,cluster,label\n";
    for (std::size_t i = 0; i < segs.size(); ++i) {
      csv += fmt::format("{}:{},{},{},{},{}\n", segs[i].trace->id,
                         segs[i].segment_index, pts[i].mean_speed,
                         pts[i].mean_gap, km.assignments[i],
                         to_string(*segs[i].phase));
    }
    write_text_file(out_path, csv);
    for (int c = 0; c < km.k; ++c) {
      const auto& ct = km.centroids[static_cast<std::size_t>(c)];
      fmt::print(out, "cluster {}: mean speed {:.2f} m/s, mean gap {:.2f} m\n", c,
                 ct.mean_speed, ct.mean_gap);
    }
    fmt::print(out, "inertia {:.4g} after {} iterations\n", km.inertia, km.iterations);
    return 0;
  }
};

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Stochastic driver modelling: learn cost-weight distributions "
               "from car-following traces and generate trajectories",
               "stochdrive"};
  app.require_subcommand(1);

  SynthCmd synth;
  SegmentCmd segment;
  LearnCmd learn;
  FitCopulaCmd fit;
  GenerateCmd generate;
  EvalCmd eval;
  ReportCmd report;
  PhaseInspectCmd inspect;
  auto* c_synth = app.add_subcommand("synth", "simulate demonstration traces");
  auto* c_segment = app.add_subcommand("segment", "segment traces and label phases");
  auto* c_learn = app.add_subcommand("learn", "learn per-segment cost weights");
  auto* c_fit = app.add_subcommand("fit-copula", "fit one copula per phase cluster");
  auto* c_gen = app.add_subcommand("generate", "generate rollouts for scenarios");
  auto* c_eval = app.add_subcommand("eval", "score rollouts against observed traces");
  auto* c_report = app.add_subcommand("report", "stochastic vs baseline report with plot data");
  auto* c_inspect = app.add_subcommand("phase-inspect", "k-means of segment speed and gap");
  synth.attach(c_synth);
  segment.attach(c_segment);
  learn.attach(c_learn);
  fit.attach(c_fit);
  generate.attach(c_gen);
  eval.attach(c_eval);
  report.attach(c_report);
  inspect.attach(c_inspect);

  std::vector<std::string> reversed(args.rbegin(), args.rend());
  try {
    app.parse(reversed);
  } catch (const CLI::CallForHelp& e) {
    out << app.help();
    return 0;
  } catch (const CLI::CallForAllHelp& e) {
    out << app.help("", CLI::AppFormatMode::All);
    return 0;
  } catch (const CLI::ParseError& e) {
    err << "error: " << e.what() << "\n\n";
    const auto subs = app.get_subcommands();
    err << (subs.empty() ? app.help() : subs.front()->help());
    return 1;
  }

  set_warning_sink([&err](std::string_view msg) { err << "warning: " << msg << '\n'; });
  int code = 2;
  try {
    if (c_synth->parsed()) code = synth.run(out);
    else if (c_segment->parsed()) code = segment.run(out);
    else if (c_learn->parsed()) code = learn.run(out);
    else if (c_fit->parsed()) code = fit.run(out);
    else if (c_gen->parsed()) code = generate.run(out);
    else if (c_eval->parsed()) code = eval.run(out);
    else if (c_report->parsed()) code = report.run(out);
    else if (c_inspect->parsed()) code = inspect.run(out);
  } catch (const ConfigError& e) {
    err << "configuration error: " << e.what() << '\n';
    code = 1;
  } catch (const ValidationError& e) {
    err << "validation error: " << e.what() << '\n';
    code = 1;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    code = 2;
  }
  set_warning_sink(nullptr);
  return code;
}

}  // namespace stochdrive::cli
