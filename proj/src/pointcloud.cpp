#include "bathy/pointcloud.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>

#include "bathy/error.hpp"
#include "bathy/text_format.hpp"

namespace bathy {

namespace {

bool looks_like_header(const std::vector<std::string_view>& fields) {
  return std::none_of(fields.begin(), fields.end(),
                      [](std::string_view f) { return parse_double(f).has_value(); });
}

}  // namespace

PointCloud read_cloud(const std::filesystem::path& path, CloudFormat format) {
  if (format != CloudFormat::kXyzCsv) throw ConfigError("unsupported cloud format");
  std::ifstream in(path);
  if (!in) throw InputError("cannot open point cloud '" + path.string() + "'");

  PointCloud cloud;
  cloud.label = path.stem().string();
  std::string line;
  std::size_t line_no = 0;
  bool seen_content = false;
  while (std::getline(in, line)) {
    ++line_no;
    const auto body = trim(line);
    if (body.empty() || body.front() == '#') continue;
    const auto fields = split_fields(body);
    if (!seen_content) {
      seen_content = true;
      if (looks_like_header(fields)) continue;
    }
    auto fail = [&](const std::string& why) {
      throw InputError(path.string() + ":" + std::to_string(line_no) + ": " + why);
    };
    if (fields.size() < 3) fail("expected at least 3 fields, got " + std::to_string(fields.size()));
    double xyz[3];
    for (int k = 0; k < 3; ++k) {
      const auto v = parse_double(fields[k]);
      if (!v) fail("malformed number '" + std::string(fields[k]) + "'");
      if (!std::isfinite(*v)) fail("non-finite value '" + std::string(fields[k]) + "'");
      xyz[k] = *v;
    }
    cloud.points.push_back({xyz[0], xyz[1], xyz[2]});
  }
  if (in.bad()) throw InputError("read failure on '" + path.string() + "'");
  return cloud;
}

void write_cloud(const PointCloud& cloud, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw InputError("cannot write point cloud '" + path.string() + "'");
  out << "x,y,z\n";
  for (const auto& p : cloud.points) {
    out << format_double(p.x) << ',' << format_double(p.y) << ',' << format_double(p.z) << '\n';
  }
  out.flush();
  if (!out) throw InputError("write failure on '" + path.string() + "'");
}

// ---------------------------------------------------------------------------
// SpatialIndex: uniform grid, CSR layout.

SpatialIndex::SpatialIndex(const PointCloud& cloud) : cloud_(&cloud) {
  if (cloud.empty()) throw InputError("cannot index an empty point cloud");
  double max_x = -std::numeric_limits<double>::infinity();
  double max_y = max_x;
  min_x_ = std::numeric_limits<double>::infinity();
  min_y_ = min_x_;
  for (const auto& p : cloud.points) {
    min_x_ = std::min(min_x_, p.x);
    min_y_ = std::min(min_y_, p.y);
    max_x = std::max(max_x, p.x);
    max_y = std::max(max_y, p.y);
  }
  const double ex = max_x - min_x_;
  const double ey = max_y - min_y_;
  const double n = static_cast<double>(cloud.size());
  // Aim for about two points per cell.
  double cell = 0.0;
  if (ex > 0.0 && ey > 0.0) {
    cell = std::sqrt(2.0 * ex * ey / n);
  } else {
    cell = 2.0 * std::max(ex, ey) / n;
  }
  // Keep the grid bounded for degenerate extents.
  const double longest = std::max(ex, ey);
  if (!(cell > 0.0)) cell = 1.0;
  cell = std::max(cell, longest / 4096.0);
  cell_ = cell;
  nx_ = static_cast<long>(std::floor(ex / cell_)) + 1;
  ny_ = static_cast<long>(std::floor(ey / cell_)) + 1;

  const auto cells = static_cast<std::size_t>(nx_ * ny_);
  std::vector<std::size_t> counts(cells + 1, 0);
  std::vector<std::size_t> cell_of(cloud.size());
  for (std::size_t i = 0; i < cloud.size(); ++i) {
    const long cx = std::clamp(cell_x(cloud[i].x), 0L, nx_ - 1);
    const long cy = std::clamp(cell_y(cloud[i].y), 0L, ny_ - 1);
    cell_of[i] = static_cast<std::size_t>(cy * nx_ + cx);
    ++counts[cell_of[i] + 1];
  }
  for (std::size_t c = 0; c < cells; ++c) counts[c + 1] += counts[c];
  cell_start_ = counts;
  ordinals_.resize(cloud.size());
  for (std::size_t i = 0; i < cloud.size(); ++i) ordinals_[counts[cell_of[i]]++] = i;
}

long SpatialIndex::cell_x(double x) const {
  return static_cast<long>(std::floor((x - min_x_) / cell_));
}

long SpatialIndex::cell_y(double y) const {
  return static_cast<long>(std::floor((y - min_y_) / cell_));
}

template <typename Visit>
void SpatialIndex::visit_cell(long cx, long cy, Visit&& visit) const {
  if (cx < 0 || cy < 0 || cx >= nx_ || cy >= ny_) return;
  const auto c = static_cast<std::size_t>(cy * nx_ + cx);
  for (std::size_t k = cell_start_[c]; k < cell_start_[c + 1]; ++k) visit(ordinals_[k]);
}

std::optional<std::size_t> SpatialIndex::nearest(double x, double y, double max_radius) const {
  const auto& pts = cloud_->points;
  // Query cell may lie outside the grid; clamp to a range that still covers it.
  const long qx = std::clamp(cell_x(x), -1L, nx_);
  const long qy = std::clamp(cell_y(y), -1L, ny_);
  const long max_ring = std::max({qx + 1, nx_ - qx, qy + 1, ny_ - qy}) + 1;

  std::size_t best = 0;
  double best_d2 = std::numeric_limits<double>::infinity();
  auto consider = [&](std::size_t i) {
    const double dx = pts[i].x - x;
    const double dy = pts[i].y - y;
    const double d2 = dx * dx + dy * dy;
    if (d2 < best_d2 || (d2 == best_d2 && i < best)) {
      best_d2 = d2;
      best = i;
    }
  };

  for (long ring = 0; ring <= max_ring; ++ring) {
    if (ring == 0) {
      visit_cell(qx, qy, consider);
    } else {
      for (long cx = qx - ring; cx <= qx + ring; ++cx) {
        visit_cell(cx, qy - ring, consider);
        visit_cell(cx, qy + ring, consider);
      }
      for (long cy = qy - ring + 1; cy <= qy + ring - 1; ++cy) {
        visit_cell(qx - ring, cy, consider);
        visit_cell(qx + ring, cy, consider);
      }
    }
    // Cells beyond ring r are at least (r - 1) * cell away; one ring of slack
    // absorbs rounding in the cell assignment.
    const double guaranteed = static_cast<double>(ring - 1) * cell_;
    if (guaranteed > 0.0 && best_d2 < guaranteed * guaranteed) break;
    if (max_radius >= 0.0 && guaranteed > max_radius) break;
  }
  if (!std::isfinite(best_d2)) return std::nullopt;
  if (max_radius >= 0.0 && best_d2 > max_radius * max_radius) return std::nullopt;
  return best;
}

std::vector<std::size_t> SpatialIndex::within_radius(double x, double y, double radius) const {
  std::vector<std::size_t> out;
  if (radius < 0.0) return out;
  const auto& pts = cloud_->points;
  const double r2 = radius * radius;
  const long x0 = std::max(cell_x(x - radius) - 1, 0L);
  const long x1 = std::min(cell_x(x + radius) + 1, nx_ - 1);
  const long y0 = std::max(cell_y(y - radius) - 1, 0L);
  const long y1 = std::min(cell_y(y + radius) + 1, ny_ - 1);
  for (long cy = y0; cy <= y1; ++cy) {
    for (long cx = x0; cx <= x1; ++cx) {
      visit_cell(cx, cy, [&](std::size_t i) {
        const double dx = pts[i].x - x;
        const double dy = pts[i].y - y;
        if (dx * dx + dy * dy <= r2) out.push_back(i);
      });
    }
  }
  std::sort(out.begin(), out.end());
  return out;
}

SpatialIndex build_index(const PointCloud& cloud) { return SpatialIndex(cloud); }

}  // namespace bathy
