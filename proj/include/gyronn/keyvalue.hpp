#pragma once

#include <cstdint>
#include <istream>
#include <map>
#include <set>
#include <string>
#include <vector>

namespace gyronn {

/// Flat `key = value` text: one entry per line, '#' starts a comment,
/// blank lines ignored, duplicate keys rejected.
class KeyValueFile {
 public:
  static KeyValueFile parse(std::istream& in, const std::string& source = "<stream>");
  static KeyValueFile load(const std::string& path);

  bool has(const std::string& key) const { return entries_.count(key) != 0; }
  const std::string& get(const std::string& key) const;
  std::string get_or(const std::string& key, const std::string& fallback) const;

  double get_double(const std::string& key) const;
  double get_double_or(const std::string& key, double fallback) const;
  long long get_int(const std::string& key) const;
  long long get_int_or(const std::string& key, long long fallback) const;
  std::uint64_t get_u64(const std::string& key) const;
  bool get_bool_or(const std::string& key, bool fallback) const;
  std::vector<double> get_doubles(const std::string& key) const;
  std::vector<std::string> get_list(const std::string& key) const;

  /// Throws ValidationError naming the first key not in `allowed`.
  void reject_unknown(const std::set<std::string>& allowed) const;

  void set(const std::string& key, const std::string& value) { entries_[key] = value; }
  const std::map<std::string, std::string>& entries() const { return entries_; }
  const std::string& source() const { return source_; }

 private:
  std::map<std::string, std::string> entries_;
  std::string source_;
};

/// Splits on commas and trims whitespace; empty input yields an empty list.
std::vector<std::string> split_list(const std::string& text);

}  // namespace gyronn
