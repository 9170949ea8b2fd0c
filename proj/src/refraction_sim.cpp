#include "bathy/refraction_sim.hpp"

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <memory>
#include <numeric>
#include <random>

#include "bathy/error.hpp"

namespace bathy {

std::uint64_t mix_seed(std::uint64_t seed, std::uint64_t stream) {
  std::uint64_t z = seed + 0x9E3779B97F4A7C15ULL * (stream + 1);
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

SurfaceCrossing refract_ray(const Point3& camera, const Point3& seabed, double n) {
  if (!(camera.z > 0.0)) throw ConfigError("camera must lie above the water surface");
  if (!(seabed.z < 0.0)) throw ConfigError("seabed point must lie below the water surface");
  if (!(n >= 1.0)) throw ConfigError("refractive index must be at least 1");

  const double h = camera.z;
  const double d = -seabed.z;
  const double dx = seabed.x - camera.x;
  const double dy = seabed.y - camera.y;
  const double span = std::hypot(dx, dy);

  SurfaceCrossing out;
  if (span == 0.0) {
    out.point = {camera.x, camera.y, 0.0};
    return out;
  }

  auto sin_air = [&](double t) { return t / std::hypot(t, h); };
  auto sin_water = [&](double t) { return (span - t) / std::hypot(span - t, d); };
  auto residual = [&](double t) { return sin_air(t) - n * sin_water(t); };

  // residual(0) < 0 < residual(span) and residual is increasing.
  double lo = 0.0;
  double hi = span;
  for (int it = 0; it < 200 && hi - lo > 1e-14 * std::max(1.0, span); ++it) {
    const double mid = 0.5 * (lo + hi);
    if (residual(mid) < 0.0) {
      lo = mid;
    } else {
      hi = mid;
    }
  }
  const double t = 0.5 * (lo + hi);
  const double f = t / span;
  out.point = {camera.x + f * dx, camera.y + f * dy, 0.0};
  out.incidence_air = std::asin(std::clamp(sin_air(t), -1.0, 1.0));
  out.incidence_water = std::asin(std::clamp(sin_water(t), -1.0, 1.0));
  out.snell_residual = std::abs(residual(t));
  return out;
}

ApparentPoint apparent_point(std::span<const Point3> cameras, const Point3& seabed, double n) {
  if (cameras.size() < 2) throw ConfigError("apparent point needs at least 2 cameras");

  ApparentPoint out;
  std::vector<Eigen::Vector3d> anchors;
  std::vector<Eigen::Vector3d> dirs;
  anchors.reserve(cameras.size());
  dirs.reserve(cameras.size());
  for (const auto& cam : cameras) {
    const auto crossing = refract_ray(cam, seabed, n);
    const Eigen::Vector3d c(cam.x, cam.y, cam.z);
    const Eigen::Vector3d p(crossing.point.x, crossing.point.y, crossing.point.z);
    anchors.push_back(p);
    dirs.push_back((p - c).normalized());
    out.incidence_air.push_back(crossing.incidence_air);
  }

  // Work relative to the crossings' centroid to keep the normal equations
  // well scaled; camera heights are far larger than the water depth.
  Eigen::Vector3d origin = Eigen::Vector3d::Zero();
  for (const auto& a : anchors) origin += a;
  origin /= static_cast<double>(anchors.size());

  Eigen::Matrix3d A = Eigen::Matrix3d::Zero();
  Eigen::Vector3d rhs = Eigen::Vector3d::Zero();
  for (std::size_t i = 0; i < anchors.size(); ++i) {
    const Eigen::Matrix3d proj = Eigen::Matrix3d::Identity() - dirs[i] * dirs[i].transpose();
    A += proj;
    rhs += proj * (anchors[i] - origin);
  }
  const Eigen::SelfAdjointEigenSolver<Eigen::Matrix3d> eig(A);
  const auto ev = eig.eigenvalues();  // ascending
  out.degenerate = !(ev(0) > 1e-12 * ev(2));
  Eigen::Vector3d x;
  if (out.degenerate) {
    // Minimum-norm solution in the well-determined subspace.
    x.setZero();
    for (int k = 0; k < 3; ++k) {
      if (ev(k) > 1e-12 * ev(2)) {
        const auto v = eig.eigenvectors().col(k);
        x += v * (v.dot(rhs) / ev(k));
      }
    }
  } else {
    x = A.ldlt().solve(rhs);
  }

  double ss = 0.0;
  for (std::size_t i = 0; i < anchors.size(); ++i) {
    const Eigen::Vector3d r = (Eigen::Matrix3d::Identity() - dirs[i] * dirs[i].transpose()) *
                              (x - (anchors[i] - origin));
    ss += r.squaredNorm();
  }
  out.residual_rms = std::sqrt(ss / static_cast<double>(anchors.size()));
  x += origin;
  out.point = {x.x(), x.y(), x.z()};
  return out;
}

void SimScene::validate() const {
  if (!(refractive_index >= 1.0)) throw ConfigError("refractive index must be >= 1");
  if (cameras.size() < 2) throw ConfigError("scene needs at least 2 cameras");
  if (views < 2) throw ConfigError("scene must use at least 2 views per point");
  for (const auto& c : cameras) {
    if (!(c.z > 0.0)) throw ConfigError("all cameras must lie above the water surface");
  }
  if (!seabed) throw ConfigError("scene has no seabed");
  if (!(domain.max_x > domain.min_x) || !(domain.max_y > domain.min_y)) {
    throw ConfigError("seabed domain has zero area");
  }
}

HeightField slope_seabed(const SeabedDomain& domain, double depth_start, double depth_end) {
  if (!(depth_start > 0.0) || !(depth_end > 0.0)) {
    throw ConfigError("slope depths must be positive");
  }
  const double x0 = domain.min_x;
  const double len = domain.max_x - domain.min_x;
  return [=](double x, double) { return -(depth_start + (depth_end - depth_start) * (x - x0) / len); };
}

HeightField flat_seabed(double depth) {
  if (!(depth > 0.0)) throw ConfigError("flat seabed depth must be positive");
  return [=](double, double) { return -depth; };
}

HeightField sinusoid_seabed(double mean_depth, double amplitude, double wavelength) {
  if (!(mean_depth > 0.0) || !(wavelength > 0.0)) {
    throw ConfigError("sinusoid seabed needs positive depth and wavelength");
  }
  constexpr double kTwoPi = 6.283185307179586476925;
  return [=](double x, double) {
    return std::min(-0.05, -mean_depth + amplitude * std::sin(kTwoPi * x / wavelength));
  };
}

HeightField grid_seabed(PointCloud grid) {
  if (grid.empty()) throw InputError("seabed grid is empty");
  for (const auto& p : grid.points) {
    if (!(p.z < 0.0)) throw InputError("seabed grid elevations must all be below 0");
  }
  struct Lookup {
    PointCloud cloud;
    SpatialIndex index;
    explicit Lookup(PointCloud c) : cloud(std::move(c)), index(cloud) {}
  };
  auto lookup = std::make_shared<const Lookup>(std::move(grid));
  return [lookup](double x, double y) {
    return lookup->cloud[*lookup->index.nearest(x, y)].z;
  };
}

std::vector<Point3> camera_grid(const SeabedDomain& domain, double height, double spacing) {
  if (!(height > 0.0) || !(spacing > 0.0)) {
    throw ConfigError("camera grid needs positive height and spacing");
  }
  std::vector<Point3> cams;
  const long nx = static_cast<long>(std::ceil((domain.max_x - domain.min_x) / spacing)) + 2;
  const long ny = static_cast<long>(std::ceil((domain.max_y - domain.min_y) / spacing)) + 2;
  for (long j = 0; j <= ny; ++j) {
    for (long i = 0; i <= nx; ++i) {
      cams.push_back({domain.min_x + (static_cast<double>(i) - 1.0) * spacing,
                      domain.min_y + (static_cast<double>(j) - 1.0) * spacing, height});
    }
  }
  return cams;
}

SimResult simulate_scene(const SimScene& scene, std::size_t sample_count, std::uint64_t seed) {
  scene.validate();
  if (sample_count < 1) throw ConfigError("sample_count must be at least 1");

  const auto k = std::min<std::size_t>(static_cast<std::size_t>(scene.views), scene.cameras.size());
  SimResult res;
  res.true_cloud.label = "true";
  res.apparent_cloud.label = "apparent";
  res.true_cloud.points.resize(sample_count);
  res.apparent_cloud.points.resize(sample_count);
  res.rays.resize(sample_count);

  const auto& dom = scene.domain;
  std::vector<std::pair<double, std::size_t>> ranked(scene.cameras.size());
  std::vector<Point3> chosen(k);
  for (std::size_t i = 0; i < sample_count; ++i) {
    std::mt19937_64 rng(mix_seed(seed, i));
    std::uniform_real_distribution<double> u01(0.0, 1.0);
    const double x = dom.min_x + u01(rng) * (dom.max_x - dom.min_x);
    const double y = dom.min_y + u01(rng) * (dom.max_y - dom.min_y);
    const double z = scene.seabed(x, y);
    if (!(z < 0.0)) throw ConfigError("seabed must lie below the water surface everywhere");
    const Point3 truth{x, y, z};

    for (std::size_t c = 0; c < scene.cameras.size(); ++c) {
      const auto& cam = scene.cameras[c];
      // Straight-line off-nadir angle; ranks the same way as the refracted one.
      ranked[c] = {std::atan2(std::hypot(cam.x - x, cam.y - y), cam.z - z), c};
    }
    std::partial_sort(ranked.begin(), ranked.begin() + static_cast<std::ptrdiff_t>(k),
                      ranked.end());
    for (std::size_t v = 0; v < k; ++v) chosen[v] = scene.cameras[ranked[v].second];

    const auto app = apparent_point(chosen, truth, scene.refractive_index);
    res.true_cloud.points[i] = truth;
    res.apparent_cloud.points[i] = app.point;
    auto& meta = res.rays[i];
    meta.views = static_cast<int>(k);
    meta.mean_incidence_air =
        std::accumulate(app.incidence_air.begin(), app.incidence_air.end(), 0.0) /
        static_cast<double>(k);
    meta.residual_rms = app.residual_rms;
    meta.degenerate = app.degenerate;
  }
  return res;
}

SimResult add_noise(const SimResult& result, double sigma_z, double outlier_rate,
                    std::uint64_t seed) {
  if (!(sigma_z >= 0.0)) throw ConfigError("sigma_z must be non-negative");
  if (!(outlier_rate >= 0.0 && outlier_rate < 1.0)) {
    throw ConfigError("outlier_rate must lie in [0, 1)");
  }
  SimResult out = result;
  if (sigma_z == 0.0 && outlier_rate == 0.0) return out;
  auto& app = out.apparent_cloud.points;
  const auto& truth = out.true_cloud.points;
  for (std::size_t i = 0; i < app.size(); ++i) {
    std::mt19937_64 rng(mix_seed(seed ^ 0xA5A5A5A5A5A5A5A5ULL, i));
    std::normal_distribution<double> noise(0.0, 1.0);
    std::uniform_real_distribution<double> u01(0.0, 1.0);
    const double g = noise(rng);
    if (sigma_z > 0.0) app[i].z += sigma_z * g;
    const double pick = u01(rng);
    const double magnitude = u01(rng);
    if (pick < outlier_rate) {
      if (pick < 0.5 * outlier_rate) {
        app[i].z = truth[i].z - magnitude;  // at or below the true seabed
      } else {
        app[i].z = magnitude;  // at or above the surface
      }
    }
  }
  return out;
}

}  // namespace bathy
