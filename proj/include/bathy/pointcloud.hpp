#pragma once

#include <cstddef>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

namespace bathy {

/// Projected coordinates in meters. Elevation z is negative below the
/// water surface, which sits at z = 0.
struct Point3 {
  double x = 0.0;
  double y = 0.0;
  double z = 0.0;

  friend bool operator==(const Point3&, const Point3&) = default;
};

struct PointCloud {
  std::vector<Point3> points;
  std::string label;

  PointCloud() = default;
  explicit PointCloud(std::vector<Point3> pts, std::string lbl = {})
      : points(std::move(pts)), label(std::move(lbl)) {}

  std::size_t size() const noexcept { return points.size(); }
  bool empty() const noexcept { return points.empty(); }
  const Point3& operator[](std::size_t i) const { return points[i]; }
};

enum class CloudFormat { kXyzCsv };

/// Reads a delimited x,y,z text file. Accepts comma or whitespace separated
/// fields (extra columns are ignored), one optional header line and
/// '#'-prefixed comment lines. Throws InputError naming the offending line
/// for malformed or non-finite rows.
PointCloud read_cloud(const std::filesystem::path& path,
                      CloudFormat format = CloudFormat::kXyzCsv);

/// Writes an "x,y,z" header followed by one row per point. Values use the
/// shortest round-trip representation, so a read back is exact.
void write_cloud(const PointCloud& cloud, const std::filesystem::path& path);

/// Planimetric (x, y) index over a cloud. Holds indices into the cloud it was
/// built from; the cloud must outlive the index.
///
/// Query results are identical to an exhaustive scan: nearest() breaks ties
/// on the lowest point ordinal and within_radius() returns ordinals in
/// ascending order.
class SpatialIndex {
 public:
  explicit SpatialIndex(const PointCloud& cloud);

  /// Ordinal of the closest point, or nullopt when none lies within
  /// `max_radius` (inclusive).
  std::optional<std::size_t> nearest(double x, double y,
                                     double max_radius = -1.0) const;

  /// Ordinals of all points with planimetric distance <= radius.
  std::vector<std::size_t> within_radius(double x, double y, double radius) const;

  const PointCloud& cloud() const noexcept { return *cloud_; }

 private:
  long cell_x(double x) const;
  long cell_y(double y) const;

  template <typename Visit>
  void visit_cell(long cx, long cy, Visit&& visit) const;

  const PointCloud* cloud_;
  double min_x_ = 0.0;
  double min_y_ = 0.0;
  double cell_ = 1.0;
  long nx_ = 1;
  long ny_ = 1;
  std::vector<std::size_t> cell_start_;  // CSR offsets, size nx*ny+1
  std::vector<std::size_t> ordinals_;    // ascending within each cell
};

/// Builds an index; throws InputError on an empty cloud.
SpatialIndex build_index(const PointCloud& cloud);

}  // namespace bathy
