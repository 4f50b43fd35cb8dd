#include "stochdrive/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include <fmt/format.h>

#include "stochdrive/errors.hpp"
#include "stochdrive/logging.hpp"

namespace stochdrive {

double rmse_series(std::span<const double> a, std::span<const double> b) {
  if (a.size() != b.size()) {
    throw DomainError(fmt::format("rmse: series lengths differ ({} vs {})",
                                  a.size(), b.size()));
  }
  if (a.empty()) throw DomainError("rmse: empty series");
  double sum = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    const double d = a[i] - b[i];
    sum += d * d;
  }
  return std::sqrt(sum / static_cast<double>(a.size()));
}

std::vector<double> uniform_grid(double t_end, double dt) {
  if (!(dt > 0.0) || !(t_end >= 0.0)) {
    throw DomainError("uniform_grid needs dt > 0 and t_end >= 0");
  }
  std::vector<double> g;
  const auto n = static_cast<long>(std::floor(t_end / dt + 1e-9));
  g.reserve(static_cast<std::size_t>(n) + 2);
  for (long k = 0; k <= n; ++k) g.push_back(static_cast<double>(k) * dt);
  if (t_end - g.back() > 1e-9 * std::max(1.0, t_end)) {
    g.push_back(t_end);
  } else {
    g.back() = t_end;
  }
  return g;
}

std::vector<double> resample_linear(std::span<const double> t,
                                    std::span<const double> y,
                                    std::span<const double> query) {
  if (t.size() != y.size() || t.empty()) {
    throw DomainError("resample: time and value series differ in length");
  }
  const double slack = 1e-9 * std::max(1.0, std::abs(t.back()));
  std::vector<double> out;
  out.reserve(query.size());
  for (double q : query) {
    if (q < t.front() - slack || q > t.back() + slack) {
      throw DomainError(fmt::format("resample: t={} outside [{}, {}]", q,
                                    t.front(), t.back()));
    }
    const auto it = std::lower_bound(t.begin(), t.end(), q);
    if (it == t.end()) {
      out.push_back(y.back());
      continue;
    }
    const auto i = static_cast<std::size_t>(it - t.begin());
    if (*it == q || i == 0) {
      out.push_back(y[i]);
      continue;
    }
    const double w = (q - t[i - 1]) / (t[i] - t[i - 1]);
    out.push_back(y[i - 1] + w * (y[i] - y[i - 1]));
  }
  return out;
}

namespace {

struct Series {
  std::vector<double> t, speed, accel;
};

Series series_of(const LeaderFollowerTrace& tr) {
  Series s;
  const double t0 = tr.samples.front().t;
  for (const auto& x : tr.samples) {
    s.t.push_back(x.t - t0);
    s.speed.push_back(x.v_f);
    s.accel.push_back(x.a_f);
  }
  return s;
}

Series series_of(const RolloutResult& r) {
  Series s;
  for (std::size_t k = 0; k < r.states.size(); ++k) {
    s.t.push_back(r.states[k].t - r.states.front().t);
    s.speed.push_back(r.states[k].v_h);
    s.accel.push_back(r.accel[k]);
  }
  return s;
}

double step_of(const std::vector<double>& t) {
  return t.size() < 2 ? 0.0 : (t.back() - t.front()) / static_cast<double>(t.size() - 1);
}

// Coarser step over the shortest span across all series.
std::vector<double> common_grid(const std::vector<Series>& all) {
  double dt = 0.0;
  double end = std::numeric_limits<double>::infinity();
  for (const auto& s : all) {
    dt = std::max(dt, step_of(s.t));
    end = std::min(end, s.t.back());
  }
  if (!(dt > 0.0)) throw DomainError("evaluate: series need >= 2 samples");
  return uniform_grid(end, dt);
}

MeanSeries mean_on_grid(const std::vector<Series>& obs,
                        std::span<const double> grid) {
  MeanSeries m;
  m.t.assign(grid.begin(), grid.end());
  m.speed.assign(grid.size(), 0.0);
  m.accel.assign(grid.size(), 0.0);
  for (const auto& s : obs) {
    const auto v = resample_linear(s.t, s.speed, grid);
    const auto a = resample_linear(s.t, s.accel, grid);
    for (std::size_t k = 0; k < grid.size(); ++k) {
      m.speed[k] += v[k];
      m.accel[k] += a[k];
    }
  }
  const double n = static_cast<double>(obs.size());
  for (std::size_t k = 0; k < grid.size(); ++k) {
    m.speed[k] /= n;
    m.accel[k] /= n;
  }
  return m;
}

}  // namespace

MeanSeries mean_observed(std::span<const LeaderFollowerTrace> traces,
                         std::span<const double> t) {
  if (traces.empty()) throw DomainError("mean_observed: no traces");
  std::vector<Series> obs;
  for (const auto& tr : traces) obs.push_back(series_of(tr));
  return mean_on_grid(obs, t);
}

ModeScore evaluate(const ObservedByScenario& observed,
                   const GeneratedByScenario& generated) {
  ModeScore out;
  for (const auto& [id, gen] : generated) {
    const auto it = observed.find(id);
    if (it == observed.end() || it->second.empty()) {
      warn(fmt::format("evaluate: no observed traces for scenario {}, skipped", id));
      continue;
    }
    if (gen.empty()) {
      warn(fmt::format("evaluate: no generated samples for scenario {}, skipped", id));
      continue;
    }
    std::vector<Series> obs, sam;
    for (const auto& tr : it->second) obs.push_back(series_of(tr));
    for (const auto& r : gen) sam.push_back(series_of(r));
    std::vector<Series> all = obs;
    all.insert(all.end(), sam.begin(), sam.end());
    const auto grid = common_grid(all);
    const auto mean = mean_on_grid(obs, grid);

    ScenarioScore sc;
    sc.scenario_id = id;
    sc.observed_traces = obs.size();
    sc.generated_samples = sam.size();
    for (const auto& s : sam) {
      sc.speed_rmse += rmse_series(resample_linear(s.t, s.speed, grid), mean.speed);
      sc.accel_rmse += rmse_series(resample_linear(s.t, s.accel, grid), mean.accel);
    }
    sc.speed_rmse /= static_cast<double>(sam.size());
    sc.accel_rmse /= static_cast<double>(sam.size());
    out.scenarios.push_back(sc);
  }
  for (const auto& [id, tr] : observed) {
    if (!generated.contains(id)) {
      warn(fmt::format("evaluate: no generated samples for scenario {}, skipped", id));
    }
  }
  if (!out.scenarios.empty()) {
    for (const auto& sc : out.scenarios) {
      out.speed_rmse += sc.speed_rmse;
      out.accel_rmse += sc.accel_rmse;
    }
    out.speed_rmse /= static_cast<double>(out.scenarios.size());
    out.accel_rmse /= static_cast<double>(out.scenarios.size());
  }
  return out;
}

namespace {
double improvement(double ours, double baseline) {
  return baseline > 0.0 ? 100.0 * (baseline - ours) / baseline : 0.0;
}
}  // namespace

double EvalReport::speed_improvement() const {
  return improvement(sirl.speed_rmse, dirl.speed_rmse);
}
double EvalReport::accel_improvement() const {
  return improvement(sirl.accel_rmse, dirl.accel_rmse);
}

namespace {
const ScenarioScore* find_score(const ModeScore& m, const std::string& id) {
  for (const auto& s : m.scenarios) {
    if (s.scenario_id == id) return &s;
  }
  return nullptr;
}

std::vector<std::string> scenario_ids(const EvalReport& r) {
  std::vector<std::string> ids;
  for (const auto* m : {&r.sirl, &r.dirl}) {
    for (const auto& s : m->scenarios) ids.push_back(s.scenario_id);
  }
  std::sort(ids.begin(), ids.end());
  ids.erase(std::unique(ids.begin(), ids.end()), ids.end());
  return ids;
}

std::string cell(const ScenarioScore* s, bool speed) {
  if (s == nullptr) return "-";
  return fmt::format("{:.3f}", speed ? s->speed_rmse : s->accel_rmse);
}
}  // namespace

std::string format_report_table(const EvalReport& r) {
  std::string out;
  out += "RMSE of each generated sample against the pointwise mean of the\n";
  out += "observed test traces; averaged over samples, then over scenarios.\n\n";
  out += fmt::format("{:<20} {:>12} {:>12} {:>12} {:>12}\n", "scenario",
                     "speed SIRL", "speed DIRL", "accel SIRL", "accel DIRL");
  for (const auto& id : scenario_ids(r)) {
    const auto* s = find_score(r.sirl, id);
    const auto* d = find_score(r.dirl, id);
    out += fmt::format("{:<20} {:>12} {:>12} {:>12} {:>12}\n", id,
                       cell(s, true), cell(d, true), cell(s, false),
                       cell(d, false));
  }
  out += fmt::format("{:<20} {:>12.3f} {:>12.3f} {:>12.3f} {:>12.3f}\n",
                     "overall", r.sirl.speed_rmse, r.dirl.speed_rmse,
                     r.sirl.accel_rmse, r.dirl.accel_rmse);
  out += fmt::format(
      "\nSIRL improvement over DIRL: speed {:.1f}% (reference {:.0f}%), "
      "accel {:.1f}% (reference {:.0f}%)\n",
      r.speed_improvement(), kReferenceSpeedImprovement, r.accel_improvement(),
      kReferenceAccelImprovement);
  return out;
}

std::string format_report_csv(const EvalReport& r) {
  std::string out =
      "scenario_id,n_observed,n_sirl,n_dirl,speed_rmse_sirl,accel_rmse_sirl,"
      "speed_rmse_dirl,accel_rmse_dirl\n";
  auto num = [](const ScenarioScore* s, bool speed) {
    return s == nullptr ? std::string()
                        : fmt::format("{}", speed ? s->speed_rmse : s->accel_rmse);
  };
  for (const auto& id : scenario_ids(r)) {
    const auto* s = find_score(r.sirl, id);
    const auto* d = find_score(r.dirl, id);
    const std::size_t n_obs = s ? s->observed_traces : d->observed_traces;
    out += fmt::format("{},{},{},{},{},{},{},{}\n", id, n_obs,
                       s ? s->generated_samples : 0,
                       d ? d->generated_samples : 0, num(s, true),
                       num(s, false), num(d, true), num(d, false));
  }
  out += fmt::format("overall,,,,{},{},{},{}\n", r.sirl.speed_rmse,
                     r.sirl.accel_rmse, r.dirl.speed_rmse, r.dirl.accel_rmse);
  return out;
}

std::string format_fan_csv(std::span<const LeaderFollowerTrace> observed,
                           std::span<const RolloutResult> generated) {
  std::string out = "series,t,speed,accel\n";
  if (!observed.empty()) {
    std::vector<Series> obs;
    for (const auto& tr : observed) obs.push_back(series_of(tr));
    const auto mean = mean_on_grid(obs, common_grid(obs));
    for (std::size_t k = 0; k < mean.t.size(); ++k) {
      out += fmt::format("observed_mean,{},{},{}\n", mean.t[k], mean.speed[k],
                         mean.accel[k]);
    }
  }
  for (const auto& r : generated) {
    for (std::size_t k = 0; k < r.states.size(); ++k) {
      out += fmt::format("sample_{},{},{},{}\n", r.sample_id, r.states[k].t,
                         r.states[k].v_h, r.accel[k]);
    }
  }
  return out;
}

}  // namespace stochdrive
