#pragma once

// Strict key/value configuration files:
//
//   # comment
//   [section]
//   key = value            ; numbers, bare words, "quoted strings"
//   list = 0.01, 0.05, 0.1  (or [0.01, 0.05, 0.1])
//
// Every error names the file and line. Unknown sections or keys are rejected
// against a schema before anything runs.

#include <filesystem>
#include <istream>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

namespace uos {

using ConfigSchema = std::map<std::string, std::set<std::string>>;

class Config {
 public:
  static Config parse(std::istream& in, const std::string& source = "<config>");
  static Config load(const std::filesystem::path& path);

  /// ConfigError at the first section or key the schema does not list.
  void validate(const ConfigSchema& schema) const;

  bool has(const std::string& section, const std::string& key) const;
  bool has_section(const std::string& section) const;

  std::string get_string(const std::string& section, const std::string& key, const std::string& fallback) const;
  double get_double(const std::string& section, const std::string& key, double fallback) const;
  long long get_int(const std::string& section, const std::string& key, long long fallback) const;
  bool get_bool(const std::string& section, const std::string& key, bool fallback) const;
  std::vector<double> get_doubles(const std::string& section, const std::string& key,
                                  const std::vector<double>& fallback) const;
  std::vector<std::string> get_strings(const std::string& section, const std::string& key,
                                       const std::vector<std::string>& fallback) const;

  /// Sets or replaces a value (used for command-line overrides).
  void set(const std::string& section, const std::string& key, const std::string& value);

  const std::string& source() const noexcept { return source_; }

 private:
  struct Entry {
    std::string value;
    int line = 0;
  };
  const Entry* find(const std::string& section, const std::string& key) const;
  [[noreturn]] void fail(const Entry& e, const std::string& section, const std::string& key,
                         const std::string& what) const;

  std::string source_;
  std::map<std::string, std::map<std::string, Entry>> data_;
  std::map<std::string, int> section_lines_;
};

/// Splits "a, b, c" (optionally wrapped in brackets) into trimmed items.
std::vector<std::string> split_list(const std::string& text);
double parse_double(const std::string& text);

}  // namespace uos
