#include "stochdrive/trace.hpp"

#include <cmath>
#include <fstream>
#include <sstream>

#include <fmt/format.h>

#include "stochdrive/errors.hpp"
#include "stochdrive/kv_file.hpp"

namespace stochdrive {

double LeaderFollowerTrace::duration() const {
  if (samples.size() < 2) return 0.0;
  return samples.back().t - samples.front().t;
}

LeaderFollowerTrace make_trace(std::vector<TraceSample> samples,
                               std::string id) {
  if (samples.size() < 2) {
    throw IngestionError("trace needs at least 2 rows to infer its rate");
  }
  const double dt = samples[1].t - samples[0].t;
  if (!(dt > 0.0)) {
    throw IngestionError("row 2: timestamps must be strictly increasing");
  }
  for (std::size_t i = 0; i < samples.size(); ++i) {
    const auto& s = samples[i];
    const std::size_t row = i + 1;
    if (!std::isfinite(s.t) || !std::isfinite(s.s_f) || !std::isfinite(s.v_f) ||
        !std::isfinite(s.a_f) || !std::isfinite(s.s_l) ||
        !std::isfinite(s.v_l)) {
      throw IngestionError(fmt::format("row {}: non-finite value", row));
    }
    if (i > 0 && std::abs((s.t - samples[i - 1].t) - dt) > 1e-9) {
      throw IngestionError(
          fmt::format("row {}: non-uniform sampling (step {} vs {})", row,
                      s.t - samples[i - 1].t, dt));
    }
    if (!(s.gap() > 0.0)) {
      throw IngestionError(
          fmt::format("row {}: non-positive gap s_l - s_f = {}", row, s.gap()));
    }
    if (s.v_f < 0.0 || s.v_l < 0.0) {
      throw IngestionError(fmt::format("row {}: negative speed", row));
    }
  }
  LeaderFollowerTrace trace;
  trace.id = std::move(id);
  trace.rate_hz = 1.0 / dt;
  trace.samples = std::move(samples);
  return trace;
}

LeaderFollowerTrace parse_trace(std::string_view csv, std::string id) {
  std::istringstream in{std::string(csv)};
  std::string line;
  if (!std::getline(in, line) || trim(line) != kTraceHeader) {
    throw IngestionError(
        fmt::format("expected header '{}'", kTraceHeader));
  }
  std::vector<TraceSample> samples;
  std::size_t row = 0;
  while (std::getline(in, line)) {
    if (trim(line).empty()) continue;
    ++row;
    std::array<double, 6> v{};
    std::size_t field = 0;
    std::string_view rest = line;
    try {
      while (true) {
        const auto comma = rest.find(',');
        const auto cell = rest.substr(0, comma);
        if (field >= v.size()) throw ConfigError("too many fields");
        v[field++] = parse_double(cell, "cell");
        if (comma == std::string_view::npos) break;
        rest = rest.substr(comma + 1);
      }
    } catch (const ConfigError&) {
      throw IngestionError(fmt::format("row {}: malformed row '{}'", row, line));
    }
    if (field != v.size()) {
      throw IngestionError(
          fmt::format("row {}: expected 6 fields, got {}", row, field));
    }
    samples.push_back({v[0], v[1], v[2], v[3], v[4], v[5]});
  }
  return make_trace(std::move(samples), std::move(id));
}

LeaderFollowerTrace read_trace(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) {
    throw IngestionError(fmt::format("cannot open '{}'", path.string()));
  }
  std::stringstream buf;
  buf << in.rdbuf();
  try {
    return parse_trace(buf.str(), path.stem().string());
  } catch (const IngestionError& e) {
    throw IngestionError(fmt::format("{}: {}", path.string(), e.what()));
  }
}

std::string format_trace(const LeaderFollowerTrace& trace) {
  std::string out(kTraceHeader);
  out += '\n';
  for (const auto& s : trace.samples) {
    out += fmt::format("{},{},{},{},{},{}\n", s.t, s.s_f, s.v_f, s.a_f, s.s_l,
                       s.v_l);
  }
  return out;
}

void write_trace(const std::filesystem::path& path,
                 const LeaderFollowerTrace& trace) {
  if (path.has_parent_path()) {
    std::filesystem::create_directories(path.parent_path());
  }
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(fmt::format("cannot write '{}'", path.string()));
  out << format_trace(trace);
}

std::span<const TraceSample> TrajectorySegment::window() const {
  const std::size_t n =
      static_cast<std::size_t>(steps_per_subsegment) * num_subsegments + 1;
  return std::span<const TraceSample>(trace->samples).subspan(first_sample, n);
}

std::span<const TraceSample> TrajectorySegment::subsegment(int k) const {
  if (k < 0 || k >= num_subsegments) {
    throw DomainError(fmt::format("subsegment {} out of range", k));
  }
  const std::size_t first =
      first_sample + static_cast<std::size_t>(k) * steps_per_subsegment;
  return std::span<const TraceSample>(trace->samples)
      .subspan(first, static_cast<std::size_t>(steps_per_subsegment) + 1);
}

std::vector<TrajectorySegment> segment_trace(
    std::shared_ptr<const LeaderFollowerTrace> trace,
    const PipelineConfig& cfg) {
  const int L = cfg.subsegments_per_segment();
  const double steps_real = cfg.subsegment_len * trace->rate_hz;
  const double steps_rounded = std::round(steps_real);
  if (steps_rounded < 1.0 || std::abs(steps_real - steps_rounded) > 1e-6) {
    throw ValidationError(fmt::format(
        "trace rate {} Hz does not divide subsegment_len_Tp={} s",
        trace->rate_hz, cfg.subsegment_len));
  }
  const auto steps = static_cast<std::size_t>(steps_rounded);
  const std::size_t per_segment = steps * static_cast<std::size_t>(L);
  const std::size_t intervals =
      trace->samples.empty() ? 0 : trace->samples.size() - 1;
  const std::size_t count = intervals / per_segment;
  if (count == 0) {
    throw EmptyResultError(fmt::format(
        "trace '{}' lasts {} s, shorter than segment_len_TH={} s", trace->id,
        trace->duration(), cfg.segment_len));
  }
  std::vector<TrajectorySegment> out;
  out.reserve(count);
  for (std::size_t i = 0; i < count; ++i) {
    TrajectorySegment seg;
    seg.trace = trace;
    seg.segment_index = static_cast<long>(i);
    seg.first_sample = i * per_segment;
    seg.steps_per_subsegment = static_cast<int>(steps);
    seg.num_subsegments = L;
    out.push_back(std::move(seg));
  }
  return out;
}

}  // namespace stochdrive
