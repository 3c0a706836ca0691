#pragma once

#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace darkspec {

/// Flat `key = value` configuration. Blank lines and text after '#' are
/// ignored; later assignments override earlier ones. Lookups throw
/// ConfigError with the key name on missing or malformed values.
class KvConfig {
 public:
  static KvConfig parse(std::string_view text, const std::string& source = "<config>");
  static KvConfig load(const std::string& path);

  void set(const std::string& key, std::string value) { values_[key] = std::move(value); }
  bool has(const std::string& key) const { return values_.count(key) != 0; }

  std::string get_string(const std::string& key) const;
  std::string get_string(const std::string& key, const std::string& fallback) const;
  double get_double(const std::string& key) const;
  double get_double(const std::string& key, double fallback) const;
  long long get_int(const std::string& key) const;
  long long get_int(const std::string& key, long long fallback) const;
  bool get_bool(const std::string& key, bool fallback) const;
  /// Comma-separated list of doubles.
  std::vector<double> get_doubles(const std::string& key) const;

  const std::map<std::string, std::string>& values() const { return values_; }

 private:
  std::map<std::string, std::string> values_;
  std::string source_ = "<config>";
};

}  // namespace darkspec
