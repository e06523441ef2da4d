#include "caplab/config.hpp"

#include <cstdlib>
#include <fstream>
#include <sstream>

namespace caplab {

namespace {

std::string trim(const std::string& s) {
  const auto a = s.find_first_not_of(" \t\r\n");
  if (a == std::string::npos) return {};
  const auto b = s.find_last_not_of(" \t\r\n");
  return s.substr(a, b - a + 1);
}

}  // namespace

Config Config::parse_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file: " + path);
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_string(ss.str(), path);
}

Config Config::parse_string(const std::string& text, const std::string& origin) {
  Config cfg;
  cfg.origin_ = origin;
  std::istringstream in(text);
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) {
      throw ConfigError(origin + ":" + std::to_string(lineno) +
                        ": expected `key = value`, got: " + line);
    }
    const std::string key = trim(line.substr(0, eq));
    const std::string value = trim(line.substr(eq + 1));
    if (key.empty()) {
      throw ConfigError(origin + ":" + std::to_string(lineno) + ": empty key");
    }
    if (cfg.entries_.count(key)) {
      throw ConfigError(origin + ":" + std::to_string(lineno) +
                        ": duplicate key `" + key + "`");
    }
    cfg.entries_[key] = Entry{value, lineno, false};
  }
  return cfg;
}

bool Config::has(const std::string& key) const {
  auto it = entries_.find(key);
  if (it != entries_.end()) it->second.used = true;
  return it != entries_.end();
}

const Config::Entry& Config::require(const std::string& key) const {
  auto it = entries_.find(key);
  if (it == entries_.end()) {
    throw ConfigError(origin_ + ": missing required field `" + key + "`");
  }
  it->second.used = true;
  return it->second;
}

void Config::fail(const std::string& key, const std::string& what) const {
  auto it = entries_.find(key);
  const int line = (it == entries_.end()) ? 0 : it->second.line;
  throw ConfigError(origin_ + ":" + std::to_string(line) + ": field `" + key +
                    "`: " + what);
}

std::string Config::get_string(const std::string& key) const {
  return require(key).value;
}

std::string Config::get_string(const std::string& key,
                               const std::string& fallback) const {
  return has(key) ? require(key).value : fallback;
}

double Config::get_double(const std::string& key) const {
  const auto& e = require(key);
  char* end = nullptr;
  const double v = std::strtod(e.value.c_str(), &end);
  if (end == e.value.c_str() || *end != '\0') fail(key, "not a number: " + e.value);
  return v;
}

double Config::get_double(const std::string& key, double fallback) const {
  return has(key) ? get_double(key) : fallback;
}

int Config::get_int(const std::string& key) const {
  const auto& e = require(key);
  char* end = nullptr;
  const long v = std::strtol(e.value.c_str(), &end, 10);
  if (end == e.value.c_str() || *end != '\0') fail(key, "not an integer: " + e.value);
  return static_cast<int>(v);
}

int Config::get_int(const std::string& key, int fallback) const {
  return has(key) ? get_int(key) : fallback;
}

bool Config::get_bool(const std::string& key) const {
  const auto& e = require(key);
  if (e.value == "true" || e.value == "1" || e.value == "yes") return true;
  if (e.value == "false" || e.value == "0" || e.value == "no") return false;
  fail(key, "not a boolean (true/false): " + e.value);
}

bool Config::get_bool(const std::string& key, bool fallback) const {
  return has(key) ? get_bool(key) : fallback;
}

std::vector<double> Config::get_doubles(const std::string& key) const {
  const auto& e = require(key);
  std::vector<double> out;
  std::istringstream in(e.value);
  std::string tok;
  while (in >> tok) {
    char* end = nullptr;
    const double v = std::strtod(tok.c_str(), &end);
    if (end == tok.c_str() || *end != '\0') fail(key, "not a number list: " + e.value);
    out.push_back(v);
  }
  if (out.empty()) fail(key, "empty value");
  return out;
}

std::vector<double> Config::get_doubles(const std::string& key,
                                        const std::vector<double>& fallback) const {
  return has(key) ? get_doubles(key) : fallback;
}

void Config::override_value(const std::string& key, const std::string& value) {
  entries_[key] = Entry{value, 0, false};
}

void Config::check_consumed() const {
  std::string unknown;
  for (const auto& [key, entry] : entries_) {
    if (!entry.used) {
      if (!unknown.empty()) unknown += ", ";
      unknown += "`" + key + "` (line " + std::to_string(entry.line) + ")";
    }
  }
  if (!unknown.empty()) {
    throw ConfigError(origin_ + ": unknown field(s): " + unknown);
  }
}

std::map<std::string, std::string> Config::entries() const {
  std::map<std::string, std::string> out;
  for (const auto& [key, entry] : entries_) out[key] = entry.value;
  return out;
}

}  // namespace caplab
