#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

namespace motionorder {

/// Flat `key = value` text. Blank lines and lines starting with '#' are ignored;
/// keys and values are trimmed. Duplicate keys raise ParseError.
struct KeyValueFile {
  struct Entry {
    std::string key;
    std::string value;
    std::size_t line = 0;
  };
  std::vector<Entry> entries;

  static KeyValueFile parse(const std::string& text);
  static KeyValueFile load(const std::filesystem::path& path);

  const Entry* find(const std::string& key) const;
};

std::string trim_copy(const std::string& s);

/// Strict numeric parsing. Failures name `what`; ParseError when a line is given, else ValidationError.
double parse_double(const std::string& text, const std::string& what, std::size_t line = 0);
std::int64_t parse_int(const std::string& text, const std::string& what, std::size_t line = 0);
std::uint64_t parse_uint(const std::string& text, const std::string& what, std::size_t line = 0);

std::string read_file(const std::filesystem::path& path);
void write_file(const std::filesystem::path& path, const std::string& contents);

} // namespace motionorder
