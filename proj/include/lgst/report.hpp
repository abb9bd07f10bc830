#pragma once

#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "json.hpp"

namespace lgst {

inline constexpr const char* kToolVersion = "lgst 0.1.0";

/// Provenance of one command invocation. Every output file carries hash().
struct RunManifest {
  std::string subcommand;
  nlohmann::json inputs = nlohmann::json::object();  // name -> file ref or hash
  nlohmann::json seeds = nlohmann::json::object();
  nlohmann::json config = nlohmann::json::object();
  std::string tool_version = kToolVersion;

  nlohmann::json to_json() const;
  std::string hash() const;
};

/// Shortest text that reads back to the same double.
std::string format_double(double v);

/// CSV with a leading "# manifest: <hash>" line. Fields are written verbatim.
void write_csv(const std::filesystem::path& path, const std::string& manifest_hash,
               const std::vector<std::string>& header,
               const std::vector<std::vector<std::string>>& rows);

/// Pretty JSON with a top-level "manifest" member.
void write_json(const std::filesystem::path& path, const std::string& manifest_hash,
                nlohmann::json content);

struct BoxStats {
  double min = 0, q1 = 0, median = 0, q3 = 0, max = 0, mean = 0;
  std::size_t count = 0;
  nlohmann::json to_json() const;
};

double mean_of(std::span<const double> v);
/// Linear-interpolation quantile, p in [0, 1]; 0 for an empty input.
double quantile(std::vector<double> v, double p);
double median_of(std::span<const double> v);
BoxStats box_stats(std::span<const double> v);
/// Spearman rank correlation (average ranks for ties).
double spearman(std::span<const double> a, std::span<const double> b);

// Minimal SVG charts. Each embeds the manifest hash in a comment.
struct ScatterSeries {
  std::string label;
  std::vector<double> x, y;
};
void write_scatter_svg(const std::filesystem::path& path, const std::string& manifest_hash,
                       const std::string& title, const std::string& x_label,
                       const std::string& y_label, const std::vector<ScatterSeries>& series,
                       bool diagonal = false, bool log_scale = false);
void write_histogram_svg(const std::filesystem::path& path, const std::string& manifest_hash,
                         const std::string& title, const std::string& x_label,
                         std::span<const double> values, std::size_t bins = 40);
void write_box_svg(const std::filesystem::path& path, const std::string& manifest_hash,
                   const std::string& title, const std::vector<std::string>& labels,
                   const std::vector<BoxStats>& boxes, double reference = -1.0,
                   bool log_scale = false);

}  // namespace lgst
