#include "stochdrive/serialization.hpp"

#include <algorithm>
#include <fstream>
#include <random>
#include <sstream>

#include <fmt/format.h>

#include "stochdrive/errors.hpp"
#include "stochdrive/kv_file.hpp"
#include "stochdrive/logging.hpp"
#include "stochdrive/synth.hpp"

namespace stochdrive {

namespace {

std::vector<std::string_view> split_csv(std::string_view line) {
  std::vector<std::string_view> cells;
  while (true) {
    const auto comma = line.find(',');
    cells.push_back(trim(line.substr(0, comma)));
    if (comma == std::string_view::npos) break;
    line = line.substr(comma + 1);
  }
  return cells;
}

// Yields data rows after checking the header; skips blank and '#' lines.
std::vector<std::vector<std::string_view>> csv_rows(std::string_view csv,
                                                     std::string_view header,
                                                     std::string_view what) {
  std::vector<std::vector<std::string_view>> rows;
  bool seen_header = false;
  std::size_t fields = split_csv(header).size();
  while (!csv.empty()) {
    const auto nl = csv.find('\n');
    const auto line = trim(csv.substr(0, nl));
    csv = nl == std::string_view::npos ? std::string_view{} : csv.substr(nl + 1);
    if (line.empty() || line.front() == '#') continue;
    if (!seen_header) {
      if (line != header) {
        throw IngestionError(fmt::format("{}: expected header '{}'", what, header));
      }
      seen_header = true;
      continue;
    }
    auto cells = split_csv(line);
    if (cells.size() != fields) {
      throw IngestionError(fmt::format("{} row {}: expected {} fields, got {}",
                                       what, rows.size() + 1, fields,
                                       cells.size()));
    }
    rows.push_back(std::move(cells));
  }
  if (!seen_header) throw IngestionError(fmt::format("{}: missing header", what));
  return rows;
}

void append_weight_rows(std::string& out, const WeightVector& w) {
  const auto feats = w.weights.features();
  for (std::size_t j = 0; j < feats.size(); ++j) {
    out += fmt::format("{},{},{},{}\n", to_string(w.phase()), w.segment_index,
                       to_string(feats[j]), w.weights.values[j]);
  }
}

}  // namespace

std::string format_weights_csv(const LearnedWeights& learned) {
  std::string out(kWeightsHeader);
  out += '\n';
  for (const auto& s : learned.segments) {
    if (s.result) append_weight_rows(out, s.result->theta);
  }
  return out;
}

std::string format_weights_csv(const std::map<PhaseLabel, LearnResult>& dirl) {
  std::string out(kWeightsHeader);
  out += '\n';
  for (const auto& [phase, r] : dirl) {
    WeightVector w = r.theta;
    w.segment_index = -1;
    append_weight_rows(out, w);
  }
  return out;
}

WeightClusters parse_weights_csv(std::string_view csv) {
  // (phase, segment) -> feature -> weight, in first-seen order.
  std::vector<std::pair<std::pair<PhaseLabel, long>, std::map<Feature, double>>> acc;
  std::size_t row = 0;
  for (const auto& cells : csv_rows(csv, kWeightsHeader, "weights CSV")) {
    ++row;
    const auto phase = phase_from_string(cells[0]);
    if (!phase) {
      throw IngestionError(fmt::format("weights CSV row {}: unknown cluster '{}'",
                                       row, cells[0]));
    }
    const auto feat = feature_from_string(cells[2]);
    if (!feat) {
      throw IngestionError(fmt::format("weights CSV row {}: unknown feature '{}'",
                                       row, cells[2]));
    }
    long seg = 0;
    double w = 0.0;
    try {
      seg = parse_int(cells[1], "segment_index");
      w = parse_double(cells[3], "weight");
    } catch (const ConfigError& e) {
      throw IngestionError(fmt::format("weights CSV row {}: {}", row, e.what()));
    }
    const std::pair<PhaseLabel, long> key{*phase, seg};
    auto it = std::find_if(acc.begin(), acc.end(),
                           [&](const auto& e) { return e.first == key; });
    if (it == acc.end()) {
      acc.push_back({key, {}});
      it = std::prev(acc.end());
    }
    if (!it->second.emplace(*feat, w).second) {
      throw IngestionError(fmt::format("weights CSV row {}: duplicate feature {}",
                                       row, cells[2]));
    }
  }
  WeightClusters out;
  for (const auto& [key, values] : acc) {
    WeightVector w;
    w.weights.phase = key.first;
    w.segment_index = key.second;
    const auto feats = feature_set(key.first);
    if (values.size() != feats.size()) {
      throw IngestionError(fmt::format(
          "weights CSV: segment {} has {} features, phase {} needs {}",
          key.second, values.size(), to_string(key.first), feats.size()));
    }
    for (auto f : feats) {
      const auto v = values.find(f);
      if (v == values.end()) {
        throw IngestionError(fmt::format("weights CSV: segment {} lacks {}",
                                         key.second, to_string(f)));
      }
      w.weights.values.push_back(v->second);
    }
    out[key.first].push_back(std::move(w));
  }
  return out;
}

std::string format_learn_trace_csv(const LearnedWeights& learned) {
  std::string out(kLearnTraceHeader);
  out += '\n';
  for (const auto& s : learned.segments) {
    if (!s.result) continue;
    for (const auto& e : s.result->trace) {
      out += fmt::format("{},{},{},{}\n", s.global_index, e.epoch, e.grad_norm,
                         e.learning_rate);
    }
  }
  return out;
}

std::string format_learn_trace_csv(const std::map<PhaseLabel, LearnResult>& dirl) {
  std::string out(kDirlTraceHeader);
  out += '\n';
  for (const auto& [phase, r] : dirl) {
    for (const auto& e : r.trace) {
      out += fmt::format("{},{},{},{}\n", to_string(phase), e.epoch,
                         e.grad_norm, e.learning_rate);
    }
  }
  return out;
}

std::string format_segment_manifest(const LearnedWeights& learned,
                                    const std::vector<TrajectorySegment>& segs) {
  std::string out(kSegmentManifestHeader);
  out += '\n';
  for (const auto& s : learned.segments) {
    const auto& seg = segs.at(static_cast<std::size_t>(s.global_index));
    std::string status = "failed";
    std::string epochs, grad;
    if (s.result) {
      status = s.result->converged ? "converged" : "max_epochs";
      epochs = fmt::format("{}", s.result->trace.size());
      grad = fmt::format("{}", s.result->final_grad_norm);
    }
    std::string err = s.error;
    std::replace(err.begin(), err.end(), ',', ';');
    std::replace(err.begin(), err.end(), '\n', ' ');
    out += fmt::format("{},{},{},{},{},{},{},{},{}\n", s.global_index,
                       s.trace_id, s.segment_index, seg.start_time(),
                       to_string(s.phase), status, epochs, grad, err);
  }
  return out;
}

std::string_view to_string(Split s) {
  return s == Split::Train ? "train" : "test";
}

std::vector<SplitEntry> split_train_test(const std::vector<std::string>& ids,
                                         std::size_t train_per_scenario,
                                         std::uint64_t seed) {
  std::map<std::string, std::vector<std::string>> by_scenario;
  for (const auto& id : ids) by_scenario[scenario_of_trace(id)].push_back(id);
  std::vector<SplitEntry> out;
  for (auto& [scenario, members] : by_scenario) {
    std::sort(members.begin(), members.end());
    std::mt19937_64 rng(derive_seed(seed, scenario, 0));
    // Fisher-Yates with an explicit draw so the order does not depend on
    // the standard library's shuffle.
    for (std::size_t i = members.size(); i > 1; --i) {
      const auto j = static_cast<std::size_t>(rng() % i);
      std::swap(members[i - 1], members[j]);
    }
    if (members.size() <= train_per_scenario) {
      warn(fmt::format("split: scenario {} has {} traces, none left for testing",
                       scenario, members.size()));
    }
    for (std::size_t i = 0; i < members.size(); ++i) {
      out.push_back({members[i], scenario,
                     i < train_per_scenario ? Split::Train : Split::Test});
    }
  }
  std::sort(out.begin(), out.end(),
            [](const auto& a, const auto& b) { return a.trace_id < b.trace_id; });
  return out;
}

std::string format_split_manifest(const std::vector<SplitEntry>& split) {
  std::string out(kSplitHeader);
  out += '\n';
  for (const auto& e : split) {
    out += fmt::format("{},{},{}\n", e.trace_id, e.scenario_id, to_string(e.split));
  }
  return out;
}

std::vector<SplitEntry> parse_split_manifest(std::string_view csv) {
  std::vector<SplitEntry> out;
  for (const auto& cells : csv_rows(csv, kSplitHeader, "split manifest")) {
    SplitEntry e{std::string(cells[0]), std::string(cells[1]), Split::Train};
    if (cells[2] == "test") {
      e.split = Split::Test;
    } else if (cells[2] != "train") {
      throw IngestionError(fmt::format("split manifest: bad split '{}'", cells[2]));
    }
    out.push_back(std::move(e));
  }
  return out;
}

std::string read_text_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IngestionError(fmt::format("cannot open {}", path.string()));
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_text_file(const std::filesystem::path& path, std::string_view text) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error(fmt::format("cannot write {}", path.string()));
  out.write(text.data(), static_cast<std::streamsize>(text.size()));
  if (!out) throw Error(fmt::format("write failed: {}", path.string()));
}

std::vector<LeaderFollowerTrace> read_trace_dir(const std::filesystem::path& dir) {
  if (!std::filesystem::is_directory(dir)) {
    throw IngestionError(fmt::format("{} is not a directory", dir.string()));
  }
  std::vector<std::filesystem::path> files;
  for (const auto& e : std::filesystem::directory_iterator(dir)) {
    if (e.is_regular_file() && e.path().extension() == ".csv") files.push_back(e.path());
  }
  std::sort(files.begin(), files.end());
  std::vector<LeaderFollowerTrace> out;
  out.reserve(files.size());
  for (const auto& f : files) out.push_back(read_trace(f));
  return out;
}

}  // namespace stochdrive
