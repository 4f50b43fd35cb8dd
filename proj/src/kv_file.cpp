#include "stochdrive/kv_file.hpp"

#include <charconv>
#include <fstream>
#include <set>

#include <fmt/format.h>

#include "stochdrive/errors.hpp"

namespace stochdrive {

std::string_view trim(std::string_view s) {
  const auto first = s.find_first_not_of(" \t\r\n");
  if (first == std::string_view::npos) return {};
  const auto last = s.find_last_not_of(" \t\r\n");
  return s.substr(first, last - first + 1);
}

std::vector<KeyValueEntry> parse_key_values(std::istream& in,
                                            std::string_view source) {
  std::vector<KeyValueEntry> entries;
  std::set<std::string, std::less<>> seen;
  std::string raw;
  int line_no = 0;
  while (std::getline(in, raw)) {
    ++line_no;
    const auto line = trim(raw);
    if (line.empty() || line.front() == '#') continue;
    const auto eq = line.find('=');
    if (eq == std::string_view::npos) {
      throw ConfigError(fmt::format("{}:{}: expected key=value, got '{}'",
                                    source, line_no, line));
    }
    std::string key(trim(line.substr(0, eq)));
    std::string value(trim(line.substr(eq + 1)));
    if (key.empty()) {
      throw ConfigError(fmt::format("{}:{}: empty key", source, line_no));
    }
    if (!seen.insert(key).second) {
      throw ConfigError(
          fmt::format("{}:{}: duplicate key '{}'", source, line_no, key));
    }
    entries.push_back({std::move(key), std::move(value), line_no});
  }
  return entries;
}

std::vector<KeyValueEntry> read_key_value_file(
    const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) {
    throw ConfigError(fmt::format("cannot open '{}'", path.string()));
  }
  return parse_key_values(in, path.string());
}

namespace {

template <typename T>
T parse_number(std::string_view text, std::string_view key,
               std::string_view what) {
  text = trim(text);
  T out{};
  const auto* end = text.data() + text.size();
  const auto [ptr, ec] = std::from_chars(text.data(), end, out);
  if (text.empty() || ec != std::errc() || ptr != end) {
    throw ConfigError(
        fmt::format("key '{}': cannot parse '{}' as {}", key, text, what));
  }
  return out;
}

}  // namespace

double parse_double(std::string_view text, std::string_view key) {
  return parse_number<double>(text, key, "a number");
}

std::int64_t parse_int(std::string_view text, std::string_view key) {
  return parse_number<std::int64_t>(text, key, "an integer");
}

std::uint64_t parse_uint(std::string_view text, std::string_view key) {
  return parse_number<std::uint64_t>(text, key, "an unsigned integer");
}

}  // namespace stochdrive
