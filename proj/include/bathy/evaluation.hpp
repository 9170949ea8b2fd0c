#pragma once

#include <cstddef>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "bathy/pointcloud.hpp"

namespace bathy {

enum class NormalMode { kVertical, kEstimated };

struct M3c2Params {
  NormalMode normal_mode = NormalMode::kVertical;
  double normal_scale = 5.0;      // D: neighbourhood diameter for normals
  double projection_scale = 2.0;  // d: cylinder diameter
  double max_depth = 20.0;        // cylinder half-length

  void validate() const;
};

struct M3c2Point {
  Point3 core;
  Point3 normal;  // unit vector, oriented upward
  double distance = 0.0;
  std::size_t n1 = 0;  // reference population in the cylinder
  std::size_t n2 = 0;  // compared population in the cylinder
  double spread1 = 0.0;
  double spread2 = 0.0;

  bool valid() const noexcept { return n1 >= 1 && n2 >= 1; }
};

struct HistogramBin {
  double low = 0.0;
  double high = 0.0;
  std::size_t count = 0;
};

struct DistanceStats {
  std::size_t count = 0;
  double gaussian_mean = 0.0;
  double rmse = 0.0;
  double stddev = 0.0;  // population
  double bin_width = 0.1;
  std::vector<HistogramBin> histogram;
};

struct ComparisonReport {
  std::vector<M3c2Point> points;  // core-point order
  std::optional<DistanceStats> stats;
  std::size_t invalid_count = 0;
  M3c2Params params;
};

/// Multiscale model-to-model distance at every core point.
///
/// Normals are vertical, or (estimated mode) the smallest-variance axis of
/// the core cloud's neighbours within D/2, oriented upward. Each cloud is
/// projected onto the normal inside a cylinder of diameter d and half-length
/// max_depth; distance = mean(compared) - mean(reference), so a compared
/// cloud lying above the reference yields positive values. Core points with
/// an empty cylinder on either side are invalid and left out of the stats.
ComparisonReport m3c2_distance(const PointCloud& reference, const PointCloud& compared,
                               const M3c2Params& params, const PointCloud& core,
                               double bin_width = 0.1);

/// Same with the reference cloud as core points.
ComparisonReport m3c2_distance(const PointCloud& reference, const PointCloud& compared,
                               const M3c2Params& params = {}, double bin_width = 0.1);

/// Coefficient of determination 1 - SSE/SST. Throws NumericalError when
/// z_true is constant, InputError on length mismatch or fewer than 2 values.
double fitting_score(std::span<const double> z_true, std::span<const double> z_predicted);

/// Mean, RMSE, population stddev and a fixed-width histogram over the valid
/// points. Bins are aligned to multiples of bin_width. Throws NumericalError
/// when no point is valid.
DistanceStats distance_stats(const ComparisonReport& report, double bin_width = 0.1);
DistanceStats distance_stats(std::span<const double> distances, double bin_width = 0.1);

struct SectionStation {
  double chainage = 0.0;
  std::vector<std::optional<double>> z;  // one per cloud, nullopt when absent
};

struct SectionProfile {
  std::vector<std::pair<double, double>> polyline;
  double half_width = 0.0;
  double station_step = 0.0;
  std::vector<std::string> labels;
  std::vector<SectionStation> stations;
};

/// Cross-section along a polyline. Stations sit every `station_step` of
/// chainage from 0 to the polyline length; a point contributes to the station
/// nearest its projected chainage when its offset from the polyline is at
/// most `half_width`. Station z is the mean elevation of its points.
SectionProfile extract_section(std::span<const PointCloud> clouds,
                               const std::vector<std::pair<double, double>>& polyline,
                               double half_width, double station_step);

void write_distances_csv(const ComparisonReport& report, const std::filesystem::path& path);
void write_histogram_csv(const DistanceStats& stats, const std::filesystem::path& path);
void write_section_csv(const SectionProfile& section, const std::filesystem::path& path);

}  // namespace bathy
