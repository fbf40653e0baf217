#include "uos/config.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <fstream>
#include <sstream>

#include "uos/error.hpp"

namespace uos {

namespace {

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return "";
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

// Removes a trailing # or ; comment that is not inside double quotes.
std::string strip_comment(const std::string& s) {
  bool quoted = false;
  for (std::size_t i = 0; i < s.size(); ++i) {
    if (s[i] == '"') quoted = !quoted;
    if (!quoted && (s[i] == '#' || s[i] == ';')) return s.substr(0, i);
  }
  return s;
}

std::string unquote(const std::string& s) {
  if (s.size() >= 2 && s.front() == '"' && s.back() == '"') return s.substr(1, s.size() - 2);
  return s;
}

bool valid_name(const std::string& s) {
  if (s.empty()) return false;
  for (char c : s)
    if (!(std::isalnum(static_cast<unsigned char>(c)) || c == '_' || c == '-')) return false;
  return true;
}

}  // namespace

std::vector<std::string> split_list(const std::string& text) {
  std::string body = trim(text);
  if (body.size() >= 2 && body.front() == '[' && body.back() == ']') body = body.substr(1, body.size() - 2);
  std::vector<std::string> out;
  if (trim(body).empty()) return out;
  std::stringstream ss(body);
  std::string item;
  while (std::getline(ss, item, ',')) out.push_back(unquote(trim(item)));
  return out;
}

double parse_double(const std::string& text) {
  const std::string t = trim(text);
  double v = 0;
  const auto [ptr, ec] = std::from_chars(t.data(), t.data() + t.size(), v);
  if (t.empty() || ec != std::errc() || ptr != t.data() + t.size())
    throw Error(ErrorCode::ConfigError, "not a number: '" + t + "'");
  return v;
}

Config Config::parse(std::istream& in, const std::string& source) {
  Config cfg;
  cfg.source_ = source;
  std::string section;
  std::string raw;
  int lineno = 0;
  auto fail_at = [&](const std::string& what) {
    throw Error(ErrorCode::ConfigError, source + ":" + std::to_string(lineno) + ": " + what);
  };
  while (std::getline(in, raw)) {
    ++lineno;
    const std::string line = trim(strip_comment(raw));
    if (line.empty()) continue;
    if (line.front() == '[') {
      if (line.back() != ']') fail_at("unterminated section header");
      section = trim(line.substr(1, line.size() - 2));
      if (!valid_name(section)) fail_at("bad section name '" + section + "'");
      if (cfg.section_lines_.count(section)) fail_at("duplicate section [" + section + "]");
      cfg.section_lines_[section] = lineno;
      cfg.data_[section];
      continue;
    }
    const auto eq = line.find('=');
    if (eq == std::string::npos) fail_at("expected 'key = value'");
    if (section.empty()) fail_at("key outside of any [section]");
    const std::string key = trim(line.substr(0, eq));
    const std::string value = trim(line.substr(eq + 1));
    if (!valid_name(key)) fail_at("bad key '" + key + "'");
    if (value.empty()) fail_at("missing value for '" + key + "'");
    if (std::count(value.begin(), value.end(), '"') % 2) fail_at("unbalanced quotes");
    auto& entries = cfg.data_[section];
    if (entries.count(key)) fail_at("duplicate key '" + key + "'");
    entries[key] = Entry{unquote(value), lineno};
  }
  return cfg;
}

Config Config::load(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::ConfigError, "cannot open config file " + path.string());
  return parse(in, path.string());
}

void Config::validate(const ConfigSchema& schema) const {
  for (const auto& [section, entries] : data_) {
    const auto it = schema.find(section);
    if (it == schema.end()) {
      const auto line = section_lines_.count(section) ? section_lines_.at(section) : 0;
      throw Error(ErrorCode::ConfigError,
                  source_ + ":" + std::to_string(line) + ": unknown section [" + section + "]");
    }
    for (const auto& [key, entry] : entries)
      if (!it->second.count(key))
        throw Error(ErrorCode::ConfigError, source_ + ":" + std::to_string(entry.line) + ": unknown key '" + key +
                                                "' in [" + section + "]");
  }
}

const Config::Entry* Config::find(const std::string& section, const std::string& key) const {
  const auto s = data_.find(section);
  if (s == data_.end()) return nullptr;
  const auto k = s->second.find(key);
  return k == s->second.end() ? nullptr : &k->second;
}

void Config::fail(const Entry& e, const std::string& section, const std::string& key,
                  const std::string& what) const {
  throw Error(ErrorCode::ConfigError,
              source_ + ":" + std::to_string(e.line) + ": [" + section + "] " + key + ": " + what);
}

bool Config::has(const std::string& section, const std::string& key) const { return find(section, key); }

bool Config::has_section(const std::string& section) const { return data_.count(section) > 0; }

std::string Config::get_string(const std::string& section, const std::string& key,
                               const std::string& fallback) const {
  const Entry* e = find(section, key);
  return e ? e->value : fallback;
}

double Config::get_double(const std::string& section, const std::string& key, double fallback) const {
  const Entry* e = find(section, key);
  if (!e) return fallback;
  try {
    return parse_double(e->value);
  } catch (const Error&) {
    fail(*e, section, key, "expected a number, got '" + e->value + "'");
  }
}

long long Config::get_int(const std::string& section, const std::string& key, long long fallback) const {
  const Entry* e = find(section, key);
  if (!e) return fallback;
  long long v = 0;
  const auto& s = e->value;
  const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || ptr != s.data() + s.size()) fail(*e, section, key, "expected an integer, got '" + s + "'");
  return v;
}

bool Config::get_bool(const std::string& section, const std::string& key, bool fallback) const {
  const Entry* e = find(section, key);
  if (!e) return fallback;
  if (e->value == "true" || e->value == "1" || e->value == "yes") return true;
  if (e->value == "false" || e->value == "0" || e->value == "no") return false;
  fail(*e, section, key, "expected true or false, got '" + e->value + "'");
}

std::vector<double> Config::get_doubles(const std::string& section, const std::string& key,
                                        const std::vector<double>& fallback) const {
  const Entry* e = find(section, key);
  if (!e) return fallback;
  std::vector<double> out;
  for (const auto& item : split_list(e->value)) {
    try {
      out.push_back(parse_double(item));
    } catch (const Error&) {
      fail(*e, section, key, "expected a list of numbers, got '" + item + "'");
    }
  }
  if (out.empty()) fail(*e, section, key, "empty list");
  return out;
}

std::vector<std::string> Config::get_strings(const std::string& section, const std::string& key,
                                             const std::vector<std::string>& fallback) const {
  const Entry* e = find(section, key);
  if (!e) return fallback;
  auto out = split_list(e->value);
  if (out.empty()) fail(*e, section, key, "empty list");
  return out;
}

void Config::set(const std::string& section, const std::string& key, const std::string& value) {
  data_[section][key] = Entry{value, 0};
}

}  // namespace uos
