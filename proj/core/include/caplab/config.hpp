#pragma once

#include <map>
#include <stdexcept>
#include <string>
#include <vector>

namespace caplab {

/// Configuration / usage errors. The CLI maps these to exit code 2.
class ConfigError : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

/// Numerical failures (non-convergence, inconsistent solver output).
/// The CLI maps these to exit code 3.
class NumericsError : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

/// Plain-text configuration: one `key = value` pair per line, `#` starts a
/// comment. Keys are dotted paths (`domain.kind`, `solver.tol`); values are
/// whitespace-separated tokens. Every module shares this one format, and a
/// `kind` key selects variants where needed.
///
/// Accessors record which keys were read so that check_consumed() can report
/// typos (keys nothing ever asked for) with their line numbers.
class Config {
public:
  static Config parse_file(const std::string& path);
  static Config parse_string(const std::string& text,
                             const std::string& origin = "<string>");

  bool has(const std::string& key) const;

  std::string get_string(const std::string& key) const;
  std::string get_string(const std::string& key, const std::string& fallback) const;
  double get_double(const std::string& key) const;
  double get_double(const std::string& key, double fallback) const;
  int get_int(const std::string& key) const;
  int get_int(const std::string& key, int fallback) const;
  bool get_bool(const std::string& key) const;
  bool get_bool(const std::string& key, bool fallback) const;
  std::vector<double> get_doubles(const std::string& key) const;
  std::vector<double> get_doubles(const std::string& key,
                                  const std::vector<double>& fallback) const;

  /// Inserts or replaces a key (CLI --set overrides).
  void override_value(const std::string& key, const std::string& value);

  /// Throws ConfigError listing keys that were never read.
  void check_consumed() const;

  /// Resolved snapshot (key -> raw value) for run manifests.
  std::map<std::string, std::string> entries() const;

  const std::string& origin() const { return origin_; }

private:
  struct Entry {
    std::string value;
    int line = 0;
    mutable bool used = false;
  };

  const Entry& require(const std::string& key) const;
  [[noreturn]] void fail(const std::string& key, const std::string& what) const;

  std::map<std::string, Entry> entries_;
  std::string origin_;
};

}  // namespace caplab
