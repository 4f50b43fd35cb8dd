#pragma once

#include <cstdint>
#include <filesystem>
#include <istream>
#include <string>
#include <string_view>
#include <vector>

namespace stochdrive {

// One `key = value` line of a flat config file.
struct KeyValueEntry {
  std::string key;
  std::string value;
  int line = 0;
};

// Parses `key = value` lines. Blank lines and lines starting with '#' are
// skipped; a repeated key or a line without '=' is a ConfigError.
std::vector<KeyValueEntry> parse_key_values(std::istream& in,
                                            std::string_view source);
std::vector<KeyValueEntry> read_key_value_file(
    const std::filesystem::path& path);

double parse_double(std::string_view text, std::string_view key);
std::int64_t parse_int(std::string_view text, std::string_view key);
std::uint64_t parse_uint(std::string_view text, std::string_view key);

std::string_view trim(std::string_view s);

}  // namespace stochdrive
