#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "bathy/evaluation.hpp"
#include "bathy/pairing.hpp"
#include "bathy/refraction_sim.hpp"
#include "bathy/svr.hpp"

namespace bathy::cli {

/// Flat "section.key" -> value store. Files use INI-like syntax:
///
///   # comment
///   [svr]
///   c = 1.0
///
/// Keys before the first header live in the "global" section.
class ConfigStore {
 public:
  void load_file(const std::filesystem::path& path);
  void load_text(const std::string& text, const std::string& origin = "<text>");

  /// Accepts "section.key=value"; a bare "key=value" goes to "global".
  void set_override(const std::string& assignment);
  void set(const std::string& dotted_key, std::string value);

  std::optional<std::string> get(const std::string& dotted_key) const;
  bool contains(const std::string& dotted_key) const;

  std::string string_or(const std::string& key, const std::string& fallback) const;
  double number_or(const std::string& key, double fallback) const;
  long integer_or(const std::string& key, long fallback) const;
  std::uint64_t seed_or(const std::string& key, std::uint64_t fallback) const;
  bool flag_or(const std::string& key, bool fallback) const;

  const std::map<std::string, std::string>& entries() const noexcept { return values_; }

 private:
  std::map<std::string, std::string> values_;
};

struct GlobalConfig {
  std::uint64_t seed = 42;
  std::filesystem::path out_dir = "out";
  bool verbose = false;
};

struct SimulateConfig {
  std::string preset = "slope";  // slope | flat | sinusoid | grid
  SeabedDomain domain;
  double depth_start = 1.0;
  double depth_end = 14.8;
  double flat_depth = 5.0;
  double sin_mean = 6.0;
  double sin_amplitude = 2.0;
  double sin_wavelength = 50.0;
  std::filesystem::path seabed_file;
  double camera_height = 100.0;
  double camera_spacing = 5.0;
  std::filesystem::path cameras_file;
  double refractive_index = kSeawaterIndex;
  int views = 2;
  long points = 50000;
  double sigma_z = 0.0;
  double outlier_rate = 0.0;
};

struct PairConfig {
  std::filesystem::path image;
  std::filesystem::path reference;
  double max_radius = 1.0;
  FilterRules rules;
};

struct TrainConfig {
  std::filesystem::path samples;
  double fraction = 0.3;
  bool baseline = true;
  std::optional<double> depth_limit;
  std::filesystem::path merge_samples;
  double merge_fraction = 0.01;
  SvrHyperparams svr;
};

struct PredictConfig {
  std::filesystem::path model;
  std::filesystem::path input;
  std::filesystem::path output;
};

struct EvaluateConfig {
  std::filesystem::path model;
  std::filesystem::path image;
  std::filesystem::path reference;
  std::filesystem::path core;
  M3c2Params m3c2;
  double bin_width = 0.1;
  std::string train_label = "train";
  std::string test_label = "test";
};

using Polyline = std::vector<std::pair<double, double>>;

struct SectionConfig {
  std::filesystem::path reference;
  std::filesystem::path image;
  std::filesystem::path model;
  std::vector<Polyline> polylines;
  double half_width = 1.0;
  double station_step = 2.0;
};

struct ReportConfig {
  std::vector<std::filesystem::path> runs;
  std::filesystem::path output;
};

struct PipelineConfig {
  GlobalConfig global;
  SimulateConfig simulate;
  PairConfig pair;
  TrainConfig train;
  PredictConfig predict;
  EvaluateConfig evaluate;
  SectionConfig section;
  ReportConfig report;
};

/// Builds the typed configuration, filling unspecified paths from the
/// standard file names inside out_dir, and range-checks every parameter.
/// Throws ConfigError; never touches input files.
PipelineConfig build_config(const ConfigStore& store);

/// "x1,y1;x2,y2;..." -> vertices.
Polyline parse_polyline(const std::string& text);

}  // namespace bathy::cli
