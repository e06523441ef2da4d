#pragma once

#include <cstdint>
#include <fstream>
#include <map>
#include <string>
#include <vector>

namespace caplab {

/// Formats a double with enough digits to round-trip (deterministic output).
std::string fmt_double(double v);

/// CSV emitter with deterministic float formatting.
class CsvWriter {
public:
  CsvWriter(const std::string& path, const std::vector<std::string>& header);
  void row(const std::vector<std::string>& cells);
  void row_values(const std::vector<double>& values);
  const std::string& path() const { return path_; }

private:
  std::ofstream out_;
  std::string path_;
  std::size_t columns_;
};

/// Least-squares line fit y ~ intercept + slope * x.
struct LineFit {
  double slope = 0.0;
  double intercept = 0.0;
  double correlation = 0.0;  // Pearson r of (x, y)
  int points = 0;
};
LineFit fit_line(const std::vector<double>& x, const std::vector<double>& y);

/// FNV-1a hash of a byte string (run-manifest input fingerprints).
std::uint64_t fnv1a64(const std::string& bytes);
std::uint64_t fnv1a64_file(const std::string& path);

/// One series of a line chart.
struct SvgSeries {
  std::string label;
  std::vector<double> x;
  std::vector<double> y;
};

/// Writes a minimal self-contained SVG line chart (data inspection only).
void write_svg_chart(const std::string& path, const std::string& title,
                     const std::string& xlabel, const std::string& ylabel,
                     const std::vector<SvgSeries>& series);

/// Run manifest: resolved config, input hashes and produced files, so a run
/// can be reproduced byte-for-byte at a fixed worker count.
struct RunManifest {
  std::string command;
  std::string version;
  std::string config_path;
  std::uint64_t config_hash = 0;
  std::map<std::string, std::string> resolved_config;
  std::vector<std::string> outputs;
  int workers = 1;
  std::uint64_t seed = 0;
};
void write_manifest(const RunManifest& m, const std::string& path);

}  // namespace caplab
