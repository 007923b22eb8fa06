#include "gyronn/keyvalue.hpp"

#include <charconv>
#include <fstream>

#include "gyronn/errors.hpp"

namespace gyronn {
namespace {

std::string trim(const std::string& s) {
  const auto first = s.find_first_not_of(" \t\r\n");
  if (first == std::string::npos) return {};
  const auto last = s.find_last_not_of(" \t\r\n");
  return s.substr(first, last - first + 1);
}

double to_double(const std::string& text, const std::string& key) {
  try {
    std::size_t used = 0;
    const double v = std::stod(text, &used);
    if (used != text.size()) throw std::invalid_argument("trailing");
    return v;
  } catch (const std::exception&) {
    throw ValidationError("key '" + key + "': not a number: '" + text + "'");
  }
}

}  // namespace

std::vector<std::string> split_list(const std::string& text) {
  std::vector<std::string> out;
  if (trim(text).empty()) return out;
  std::size_t start = 0;
  while (true) {
    const auto comma = text.find(',', start);
    out.push_back(trim(text.substr(start, comma - start)));
    if (comma == std::string::npos) break;
    start = comma + 1;
  }
  return out;
}

KeyValueFile KeyValueFile::parse(std::istream& in, const std::string& source) {
  KeyValueFile kv;
  kv.source_ = source;
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (const auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos)
      throw ValidationError(source + ":" + std::to_string(lineno) + ": expected key = value");
    const std::string key = trim(line.substr(0, eq));
    const std::string value = trim(line.substr(eq + 1));
    if (key.empty())
      throw ValidationError(source + ":" + std::to_string(lineno) + ": empty key");
    if (!kv.entries_.emplace(key, value).second)
      throw ValidationError(source + ":" + std::to_string(lineno) + ": duplicate key '" + key +
                            "'");
  }
  return kv;
}

KeyValueFile KeyValueFile::load(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ValidationError("cannot open '" + path + "'");
  return parse(in, path);
}

const std::string& KeyValueFile::get(const std::string& key) const {
  const auto it = entries_.find(key);
  if (it == entries_.end()) throw ValidationError(source_ + ": missing key '" + key + "'");
  return it->second;
}

std::string KeyValueFile::get_or(const std::string& key, const std::string& fallback) const {
  const auto it = entries_.find(key);
  return it == entries_.end() ? fallback : it->second;
}

double KeyValueFile::get_double(const std::string& key) const {
  return to_double(get(key), key);
}

double KeyValueFile::get_double_or(const std::string& key, double fallback) const {
  return has(key) ? get_double(key) : fallback;
}

long long KeyValueFile::get_int(const std::string& key) const {
  const std::string& text = get(key);
  long long v = 0;
  const auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), v);
  if (ec != std::errc{} || ptr != text.data() + text.size())
    throw ValidationError("key '" + key + "': not an integer: '" + text + "'");
  return v;
}

long long KeyValueFile::get_int_or(const std::string& key, long long fallback) const {
  return has(key) ? get_int(key) : fallback;
}

std::uint64_t KeyValueFile::get_u64(const std::string& key) const {
  const std::string& text = get(key);
  std::uint64_t v = 0;
  const auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), v);
  if (ec != std::errc{} || ptr != text.data() + text.size())
    throw ValidationError("key '" + key + "': not an unsigned integer: '" + text + "'");
  return v;
}

bool KeyValueFile::get_bool_or(const std::string& key, bool fallback) const {
  if (!has(key)) return fallback;
  const std::string& v = get(key);
  if (v == "true" || v == "1" || v == "yes") return true;
  if (v == "false" || v == "0" || v == "no") return false;
  throw ValidationError("key '" + key + "': not a boolean: '" + v + "'");
}

std::vector<double> KeyValueFile::get_doubles(const std::string& key) const {
  std::vector<double> out;
  for (const auto& item : split_list(get(key))) out.push_back(to_double(item, key));
  return out;
}

std::vector<std::string> KeyValueFile::get_list(const std::string& key) const {
  return split_list(get(key));
}

void KeyValueFile::reject_unknown(const std::set<std::string>& allowed) const {
  for (const auto& [key, value] : entries_)
    if (!allowed.count(key)) throw ValidationError(source_ + ": unknown key '" + key + "'");
}

}  // namespace gyronn
