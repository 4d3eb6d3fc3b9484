#pragma once

// Flat `key = value` configuration files. Comments start with '#', strings may
// be quoted, lists are written as [a, b, c]. Section headers ([name]) prefix
// the following keys with "name.".

#include <fstream>
#include <map>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "cascdc/types.hpp"

namespace cascdc {

class Config {
 public:
  Config() = default;

  static Config parse(const std::string& text, const std::string& source = "config") {
    Config c;
    std::istringstream in(text);
    std::string line, section;
    int no = 0;
    while (std::getline(in, line)) {
      ++no;
      line = strip(strip_comment(line));
      if (line.empty()) continue;
      if (line.front() == '[' && line.back() == ']') {
        section = strip(line.substr(1, line.size() - 2));
        continue;
      }
      const auto eq = line.find('=');
      if (eq == std::string::npos) throw ConfigError(source + ":" + std::to_string(no) + ": expected key = value");
      std::string key = strip(line.substr(0, eq));
      if (key.empty()) throw ConfigError(source + ":" + std::to_string(no) + ": empty key");
      if (!section.empty()) key = section + "." + key;
      c.values_[key] = unquote(strip(line.substr(eq + 1)));
    }
    return c;
  }

  static Config load(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ConfigError(path + ": cannot open config file");
    std::ostringstream ss;
    ss << in.rdbuf();
    return parse(ss.str(), path);
  }

  bool has(const std::string& key) const { return values_.count(key) > 0; }
  void set(const std::string& key, const std::string& value) { values_[key] = value; }
  const std::map<std::string, std::string>& values() const { return values_; }

  std::string get_string(const std::string& key, const std::string& fallback) const {
    used_.insert(key);
    const auto it = values_.find(key);
    return it == values_.end() ? fallback : it->second;
  }

  long get_int(const std::string& key, long fallback) const {
    used_.insert(key);
    const auto it = values_.find(key);
    if (it == values_.end()) return fallback;
    try {
      std::size_t n = 0;
      const long v = std::stol(it->second, &n);
      if (n == it->second.size()) return v;
    } catch (const std::exception&) {
    }
    throw ConfigError("config key '" + key + "': expected an integer, got '" + it->second + "'");
  }

  double get_double(const std::string& key, double fallback) const {
    used_.insert(key);
    const auto it = values_.find(key);
    if (it == values_.end()) return fallback;
    try {
      std::size_t n = 0;
      const double v = std::stod(it->second, &n);
      if (n == it->second.size()) return v;
    } catch (const std::exception&) {
    }
    throw ConfigError("config key '" + key + "': expected a number, got '" + it->second + "'");
  }

  bool get_bool(const std::string& key, bool fallback) const {
    used_.insert(key);
    const auto it = values_.find(key);
    if (it == values_.end()) return fallback;
    if (it->second == "true" || it->second == "1" || it->second == "yes") return true;
    if (it->second == "false" || it->second == "0" || it->second == "no") return false;
    throw ConfigError("config key '" + key + "': expected true/false, got '" + it->second + "'");
  }

  std::vector<std::string> get_list(const std::string& key, const std::vector<std::string>& fallback) const {
    used_.insert(key);
    const auto it = values_.find(key);
    if (it == values_.end()) return fallback;
    std::string v = it->second;
    if (v.size() >= 2 && v.front() == '[' && v.back() == ']') v = v.substr(1, v.size() - 2);
    std::vector<std::string> out;
    std::istringstream in(v);
    std::string item;
    while (std::getline(in, item, ',')) {
      item = unquote(strip(item));
      if (!item.empty()) out.push_back(item);
    }
    return out;
  }

  std::vector<long> get_int_list(const std::string& key, const std::vector<long>& fallback) const {
    if (!has(key)) {
      used_.insert(key);
      return fallback;
    }
    std::vector<long> out;
    for (const std::string& s : get_list(key, {})) {
      try {
        std::size_t n = 0;
        const long v = std::stol(s, &n);
        if (n != s.size()) throw std::invalid_argument(s);
        out.push_back(v);
      } catch (const std::exception&) {
        throw ConfigError("config key '" + key + "': expected integers, got '" + s + "'");
      }
    }
    return out;
  }

  /// Keys present in the file that no getter asked for.
  std::vector<std::string> unused() const {
    std::vector<std::string> out;
    for (const auto& [k, v] : values_)
      if (!used_.count(k)) out.push_back(k);
    return out;
  }

  /// Canonical text form (sorted keys), used for manifests.
  std::string dump() const {
    std::string out;
    for (const auto& [k, v] : values_) out += k + " = \"" + v + "\"\n";
    return out;
  }

 private:
  static std::string strip(const std::string& s) {
    const auto b = s.find_first_not_of(" \t\r");
    if (b == std::string::npos) return "";
    const auto e = s.find_last_not_of(" \t\r");
    return s.substr(b, e - b + 1);
  }

  static std::string strip_comment(const std::string& s) {
    bool quoted = false;
    for (std::size_t i = 0; i < s.size(); ++i) {
      if (s[i] == '"') quoted = !quoted;
      if (s[i] == '#' && !quoted) return s.substr(0, i);
    }
    return s;
  }

  static std::string unquote(const std::string& s) {
    if (s.size() >= 2 && ((s.front() == '"' && s.back() == '"') || (s.front() == '\'' && s.back() == '\'')))
      return s.substr(1, s.size() - 2);
    return s;
  }

  std::map<std::string, std::string> values_;
  mutable std::set<std::string> used_;
};

}  // namespace cascdc
