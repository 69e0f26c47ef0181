#include "motionorder/keyvalue.hpp"

#include "motionorder/error.hpp"

#include <charconv>
#include <fstream>
#include <set>
#include <sstream>

namespace motionorder {

std::string trim_copy(const std::string& s) {
  const auto first = s.find_first_not_of(" \t\r\n");
  if (first == std::string::npos) return {};
  const auto last = s.find_last_not_of(" \t\r\n");
  return s.substr(first, last - first + 1);
}

KeyValueFile KeyValueFile::parse(const std::string& text) {
  KeyValueFile out;
  std::set<std::string> seen;
  std::istringstream in(text);
  std::string raw;
  std::size_t lineno = 0;
  while (std::getline(in, raw)) {
    ++lineno;
    const std::string line = trim_copy(raw);
    if (line.empty() || line[0] == '#') continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos)
      throw ParseError("expected 'key = value', got '" + line + "'", static_cast<long>(lineno));
    Entry e{trim_copy(line.substr(0, eq)), trim_copy(line.substr(eq + 1)), lineno};
    if (e.key.empty()) throw ParseError("empty key", static_cast<long>(lineno));
    if (!seen.insert(e.key).second)
      throw ParseError("duplicate key '" + e.key + "'", static_cast<long>(lineno));
    out.entries.push_back(std::move(e));
  }
  return out;
}

KeyValueFile KeyValueFile::load(const std::filesystem::path& path) { return parse(read_file(path)); }

const KeyValueFile::Entry* KeyValueFile::find(const std::string& key) const {
  for (const auto& e : entries)
    if (e.key == key) return &e;
  return nullptr;
}

namespace {

template <typename T>
T parse_strict(const std::string& text, const std::string& what, std::size_t line) {
  const std::string s = trim_copy(text);
  T value{};
  const char* first = s.data();
  const char* last = s.data() + s.size();
  if (first != last && *first == '+') ++first;
  const auto [ptr, ec] = std::from_chars(first, last, value);
  if (s.empty() || ec != std::errc{} || ptr != last) {
    const std::string msg = "invalid value '" + s + "' for " + what;
    if (line > 0) throw ParseError(msg, static_cast<long>(line));
    throw ValidationError(msg);
  }
  return value;
}

} // namespace

double parse_double(const std::string& text, const std::string& what, std::size_t line) {
  return parse_strict<double>(text, what, line);
}
std::int64_t parse_int(const std::string& text, const std::string& what, std::size_t line) {
  return parse_strict<std::int64_t>(text, what, line);
}
std::uint64_t parse_uint(const std::string& text, const std::string& what, std::size_t line) {
  return parse_strict<std::uint64_t>(text, what, line);
}

std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot open '" + path.string() + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_file(const std::filesystem::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot write '" + path.string() + "'");
  out << text;
  if (!out) throw Error("write failed for '" + path.string() + "'");
}

} // namespace motionorder
