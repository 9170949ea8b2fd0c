#include "bathy/evaluation.hpp"

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <map>

#include "bathy/error.hpp"
#include "bathy/text_format.hpp"

namespace bathy {

void M3c2Params::validate() const {
  if (!(normal_scale > 0.0)) throw ConfigError("m3c2 normal_scale must be positive");
  if (!(projection_scale > 0.0)) throw ConfigError("m3c2 projection_scale must be positive");
  if (!(max_depth > 0.0)) throw ConfigError("m3c2 max_depth must be positive");
}

namespace {

Eigen::Vector3d estimate_normal(const PointCloud& cloud, const SpatialIndex& index,
                                const Point3& at, double radius) {
  const Eigen::Vector3d up(0.0, 0.0, 1.0);
  std::vector<Eigen::Vector3d> nbrs;
  for (auto i : index.within_radius(at.x, at.y, radius)) {
    const auto& p = cloud[i];
    const Eigen::Vector3d v(p.x - at.x, p.y - at.y, p.z - at.z);
    if (v.squaredNorm() <= radius * radius) nbrs.emplace_back(p.x, p.y, p.z);
  }
  if (nbrs.size() < 3) return up;
  Eigen::Vector3d mean = Eigen::Vector3d::Zero();
  for (const auto& v : nbrs) mean += v;
  mean /= static_cast<double>(nbrs.size());
  Eigen::Matrix3d cov = Eigen::Matrix3d::Zero();
  for (const auto& v : nbrs) cov += (v - mean) * (v - mean).transpose();
  const Eigen::SelfAdjointEigenSolver<Eigen::Matrix3d> eig(cov);
  // Collinear neighbourhoods leave the plane undetermined.
  if (!(eig.eigenvalues()(1) > 1e-12 * eig.eigenvalues()(2))) return up;
  Eigen::Vector3d n = eig.eigenvectors().col(0).normalized();
  if (n.z() < 0.0) n = -n;
  return n;
}

struct CylinderSample {
  std::size_t count = 0;
  double mean = 0.0;
  double spread = 0.0;
};

CylinderSample project_cylinder(const PointCloud& cloud, const SpatialIndex& index,
                                const Point3& core, const Eigen::Vector3d& normal,
                                double radius, double half_length) {
  const double horizontal = normal.head<2>().norm();
  const double reach = half_length * horizontal + radius;
  std::vector<double> proj;
  for (auto i : index.within_radius(core.x, core.y, reach)) {
    const auto& p = cloud[i];
    const Eigen::Vector3d v(p.x - core.x, p.y - core.y, p.z - core.z);
    const double t = v.dot(normal);
    if (std::abs(t) > half_length) continue;
    if ((v - t * normal).squaredNorm() > radius * radius) continue;
    proj.push_back(t);
  }
  CylinderSample s;
  s.count = proj.size();
  if (proj.empty()) return s;
  double sum = 0.0;
  for (double t : proj) sum += t;
  s.mean = sum / static_cast<double>(proj.size());
  double ss = 0.0;
  for (double t : proj) ss += (t - s.mean) * (t - s.mean);
  s.spread = std::sqrt(ss / static_cast<double>(proj.size()));
  return s;
}

}  // namespace

ComparisonReport m3c2_distance(const PointCloud& reference, const PointCloud& compared,
                               const M3c2Params& params, const PointCloud& core,
                               double bin_width) {
  params.validate();
  if (reference.empty() || compared.empty() || core.empty()) {
    throw InputError("m3c2 needs non-empty reference, compared and core clouds");
  }
  const SpatialIndex ref_index(reference);
  const SpatialIndex cmp_index(compared);
  std::optional<SpatialIndex> core_index;
  if (params.normal_mode == NormalMode::kEstimated) core_index.emplace(core);

  ComparisonReport report;
  report.params = params;
  report.points.reserve(core.size());
  const double radius = 0.5 * params.projection_scale;
  std::vector<double> valid;
  valid.reserve(core.size());
  for (const auto& c : core.points) {
    Eigen::Vector3d n(0.0, 0.0, 1.0);
    if (core_index) n = estimate_normal(core, *core_index, c, 0.5 * params.normal_scale);
    const auto s1 = project_cylinder(reference, ref_index, c, n, radius, params.max_depth);
    const auto s2 = project_cylinder(compared, cmp_index, c, n, radius, params.max_depth);
    M3c2Point r;
    r.core = c;
    r.normal = {n.x(), n.y(), n.z()};
    r.n1 = s1.count;
    r.n2 = s2.count;
    r.spread1 = s1.spread;
    r.spread2 = s2.spread;
    if (r.valid()) {
      r.distance = s2.mean - s1.mean;
      valid.push_back(r.distance);
    } else {
      r.distance = std::numeric_limits<double>::quiet_NaN();
      ++report.invalid_count;
    }
    report.points.push_back(r);
  }
  if (!valid.empty()) report.stats = distance_stats(valid, bin_width);
  return report;
}

ComparisonReport m3c2_distance(const PointCloud& reference, const PointCloud& compared,
                               const M3c2Params& params, double bin_width) {
  return m3c2_distance(reference, compared, params, reference, bin_width);
}

double fitting_score(std::span<const double> z_true, std::span<const double> z_predicted) {
  if (z_true.size() != z_predicted.size()) {
    throw InputError("fitting score needs equally long true and predicted vectors");
  }
  if (z_true.size() < 2) throw InputError("fitting score needs at least 2 values");
  double mean = 0.0;
  for (double v : z_true) mean += v;
  mean /= static_cast<double>(z_true.size());
  double sse = 0.0;
  double sst = 0.0;
  for (std::size_t i = 0; i < z_true.size(); ++i) {
    sse += (z_true[i] - z_predicted[i]) * (z_true[i] - z_predicted[i]);
    sst += (z_true[i] - mean) * (z_true[i] - mean);
  }
  if (sst == 0.0) throw NumericalError("fitting score undefined: all true depths are equal");
  return 1.0 - sse / sst;
}

DistanceStats distance_stats(std::span<const double> distances, double bin_width) {
  if (distances.empty()) throw NumericalError("no valid distances to summarise");
  if (!(bin_width > 0.0)) throw ConfigError("histogram bin width must be positive");
  DistanceStats s;
  s.count = distances.size();
  s.bin_width = bin_width;
  const double n = static_cast<double>(distances.size());
  double sum = 0.0;
  double sum_sq = 0.0;
  for (double d : distances) {
    sum += d;
    sum_sq += d * d;
  }
  s.gaussian_mean = sum / n;
  s.rmse = std::sqrt(sum_sq / n);
  double ss = 0.0;
  for (double d : distances) ss += (d - s.gaussian_mean) * (d - s.gaussian_mean);
  s.stddev = std::sqrt(ss / n);

  std::map<long long, std::size_t> bins;
  for (double d : distances) ++bins[static_cast<long long>(std::floor(d / bin_width))];
  const long long first = bins.begin()->first;
  const long long last = bins.rbegin()->first;
  for (long long k = first; k <= last; ++k) {
    const auto it = bins.find(k);
    s.histogram.push_back({static_cast<double>(k) * bin_width,
                           static_cast<double>(k + 1) * bin_width,
                           it == bins.end() ? 0 : it->second});
  }
  return s;
}

DistanceStats distance_stats(const ComparisonReport& report, double bin_width) {
  std::vector<double> d;
  d.reserve(report.points.size());
  for (const auto& p : report.points) {
    if (p.valid()) d.push_back(p.distance);
  }
  return distance_stats(d, bin_width);
}

SectionProfile extract_section(std::span<const PointCloud> clouds,
                               const std::vector<std::pair<double, double>>& polyline,
                               double half_width, double station_step) {
  if (polyline.size() < 2) throw ConfigError("section polyline needs at least 2 vertices");
  if (!(half_width > 0.0)) throw ConfigError("section half_width must be positive");
  if (!(station_step > 0.0)) throw ConfigError("section station_step must be positive");

  std::vector<double> cumulative(polyline.size(), 0.0);
  for (std::size_t i = 1; i < polyline.size(); ++i) {
    cumulative[i] = cumulative[i - 1] + std::hypot(polyline[i].first - polyline[i - 1].first,
                                                   polyline[i].second - polyline[i - 1].second);
  }
  const double length = cumulative.back();
  if (!(length > 0.0)) throw ConfigError("section polyline has zero length");

  SectionProfile prof;
  prof.polyline = polyline;
  prof.half_width = half_width;
  prof.station_step = station_step;
  const auto n_stations = static_cast<std::size_t>(std::floor(length / station_step + 1e-9)) + 1;

  std::vector<std::vector<double>> sums(n_stations, std::vector<double>(clouds.size(), 0.0));
  std::vector<std::vector<std::size_t>> counts(n_stations,
                                               std::vector<std::size_t>(clouds.size(), 0));

  for (std::size_t c = 0; c < clouds.size(); ++c) {
    prof.labels.push_back(clouds[c].label);
    for (const auto& p : clouds[c].points) {
      double best_d2 = std::numeric_limits<double>::infinity();
      double chainage = 0.0;
      for (std::size_t s = 0; s + 1 < polyline.size(); ++s) {
        const double ax = polyline[s].first;
        const double ay = polyline[s].second;
        const double seg = cumulative[s + 1] - cumulative[s];
        if (seg == 0.0) continue;
        const double ux = (polyline[s + 1].first - ax) / seg;
        const double uy = (polyline[s + 1].second - ay) / seg;
        const double t = std::clamp((p.x - ax) * ux + (p.y - ay) * uy, 0.0, seg);
        const double dx = p.x - (ax + t * ux);
        const double dy = p.y - (ay + t * uy);
        const double d2 = dx * dx + dy * dy;
        if (d2 < best_d2) {
          best_d2 = d2;
          chainage = cumulative[s] + t;
        }
      }
      if (best_d2 > half_width * half_width) continue;
      const long long k = std::llround(chainage / station_step);
      if (k < 0 || static_cast<std::size_t>(k) >= n_stations) continue;
      if (std::abs(chainage - static_cast<double>(k) * station_step) > 0.5 * station_step) continue;
      sums[static_cast<std::size_t>(k)][c] += p.z;
      ++counts[static_cast<std::size_t>(k)][c];
    }
  }

  prof.stations.resize(n_stations);
  for (std::size_t k = 0; k < n_stations; ++k) {
    auto& st = prof.stations[k];
    st.chainage = static_cast<double>(k) * station_step;
    st.z.resize(clouds.size());
    for (std::size_t c = 0; c < clouds.size(); ++c) {
      if (counts[k][c] > 0) st.z[c] = sums[k][c] / static_cast<double>(counts[k][c]);
    }
  }
  return prof;
}

// ---------------------------------------------------------------------------
// Files

namespace {

std::ofstream open_out(const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw InputError("cannot write '" + path.string() + "'");
  return out;
}

}  // namespace

void write_distances_csv(const ComparisonReport& report, const std::filesystem::path& path) {
  auto out = open_out(path);
  out << "x,y,z,nx,ny,nz,distance,n1,n2,spread1,spread2\n";
  for (const auto& p : report.points) {
    out << format_double(p.core.x) << ',' << format_double(p.core.y) << ','
        << format_double(p.core.z) << ',' << format_double(p.normal.x) << ','
        << format_double(p.normal.y) << ',' << format_double(p.normal.z) << ','
        << (p.valid() ? format_double(p.distance) : std::string()) << ',' << p.n1 << ',' << p.n2
        << ',' << format_double(p.spread1) << ',' << format_double(p.spread2) << '\n';
  }
}

void write_histogram_csv(const DistanceStats& stats, const std::filesystem::path& path) {
  auto out = open_out(path);
  out << "bin_low,bin_high,count\n";
  for (const auto& b : stats.histogram) {
    out << format_double(b.low) << ',' << format_double(b.high) << ',' << b.count << '\n';
  }
}

void write_section_csv(const SectionProfile& section, const std::filesystem::path& path) {
  auto out = open_out(path);
  out << "chainage";
  for (std::size_t c = 0; c < section.labels.size(); ++c) {
    const auto& l = section.labels[c];
    out << ",z_" << (l.empty() ? "cloud" + std::to_string(c + 1) : l);
  }
  out << '\n';
  for (const auto& st : section.stations) {
    out << format_double(st.chainage);
    for (const auto& z : st.z) out << ',' << (z ? format_double(*z) : std::string());
    out << '\n';
  }
}

}  // namespace bathy
