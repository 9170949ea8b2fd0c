#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <vector>

#include "bathy/pointcloud.hpp"

namespace bathy {

inline constexpr double kSeawaterIndex = 1.34;

/// Where a camera-to-seabed ray crosses the flat surface z = 0.
struct SurfaceCrossing {
  Point3 point;
  double incidence_air = 0.0;    // radians from the vertical
  double incidence_water = 0.0;  // radians from the vertical
  double snell_residual = 0.0;   // |sin(air) - n*sin(water)|
};

/// Solves Snell's law for the single surface crossing of the path from
/// `camera` (z > 0) to `seabed` (z < 0). The crossing lies on the
/// planimetric segment between the two; its abscissa is found by bisection
/// on the monotone residual sin(air) - n*sin(water).
SurfaceCrossing refract_ray(const Point3& camera, const Point3& seabed, double n);

struct ApparentPoint {
  Point3 point;
  double residual_rms = 0.0;  // rms distance from `point` to the straight rays
  bool degenerate = false;    // rays too close to parallel to intersect
  std::vector<double> incidence_air;
};

/// Point a straight-ray (collinearity) intersection would report: for every
/// camera the un-refracted line camera -> surface crossing is extended below
/// the surface, and the least-squares closest point to all lines is returned.
ApparentPoint apparent_point(std::span<const Point3> cameras, const Point3& seabed, double n);

/// True seabed elevation as a function of planimetric position.
using HeightField = std::function<double(double x, double y)>;

struct SeabedDomain {
  double min_x = 0.0;
  double min_y = 0.0;
  double max_x = 200.0;
  double max_y = 100.0;
};

struct SimScene {
  std::vector<Point3> cameras;
  double refractive_index = kSeawaterIndex;
  HeightField seabed;
  SeabedDomain domain;
  int views = 2;  // cameras used per point, those with smallest incidence

  /// Throws ConfigError on index < 1, fewer than 2 cameras, cameras at or
  /// below the surface, or a missing seabed.
  void validate() const;
};

/// Plane dipping along x from `depth_start` at min_x to `depth_end` at max_x
/// (both given as positive depths).
HeightField slope_seabed(const SeabedDomain& domain, double depth_start, double depth_end);
HeightField flat_seabed(double depth);
/// mean_depth + amplitude*sin(2*pi*x/wavelength), clamped below -0.05 m.
HeightField sinusoid_seabed(double mean_depth, double amplitude, double wavelength);
/// Nearest-sample lookup in a gridded elevation cloud (all z < 0).
HeightField grid_seabed(PointCloud grid);

/// Regular camera grid at `height` above the surface with `spacing` between
/// stations, covering the domain plus one spacing of margin.
std::vector<Point3> camera_grid(const SeabedDomain& domain, double height, double spacing);

struct RayMetadata {
  double mean_incidence_air = 0.0;
  int views = 0;
  double residual_rms = 0.0;
  bool degenerate = false;
};

struct SimResult {
  PointCloud true_cloud;
  PointCloud apparent_cloud;
  std::vector<RayMetadata> rays;
};

/// Samples `sample_count` seabed points uniformly over the domain and forward
/// models each through the `views` cameras with the smallest incidence angle.
/// Point i draws from its own generator seeded by (seed, i).
SimResult simulate_scene(const SimScene& scene, std::size_t sample_count, std::uint64_t seed);

/// Adds N(0, sigma_z) to apparent z, then replaces a Bernoulli(outlier_rate)
/// share of points with refraction-invalid apparent values: half at or below
/// the true elevation, half at or above the surface.
SimResult add_noise(const SimResult& result, double sigma_z, double outlier_rate,
                    std::uint64_t seed);

/// splitmix64 finaliser, used to derive independent per-item seeds.
std::uint64_t mix_seed(std::uint64_t seed, std::uint64_t stream);

}  // namespace bathy
