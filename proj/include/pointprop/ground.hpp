// SPDX-License-Identifier: Apache-2.0
// Copyright (C) 2026 the pointprop authors
//
// Piecewise-constant ground model over a fixed grid: per-subregion height
// histograms, min-of-neighborhood post-processing, offset-based ground point
// removal, and a single-plane RANSAC baseline for comparison.

#ifndef POINTPROP_GROUND_HPP
#define POINTPROP_GROUND_HPP

#include <array>
#include <fstream>
#include <vector>

#include "pointprop/core.hpp"
#include "pointprop/parallel.hpp"

namespace pointprop {

struct GroundGridConfig {
  // Region anchored at the sensor: x in [origin_x, origin_x + length],
  // y in [origin_y, origin_y + width].
  double origin_x = 0.0;
  double origin_y = -40.0;
  double length = 70.0;      // x extent
  double width = 80.0;       // y extent
  double cell_length = 3.5;  // subregion x extent
  double cell_width = 4.0;   // subregion y extent
  double bin_width = 0.15;
  double ground_ratio = 0.05;

  int cols() const {
    return static_cast<int>(std::ceil(length / cell_length));
  }
  int rows() const { return static_cast<int>(std::ceil(width / cell_width)); }

  void validate() const {
    if (cell_length <= 0 || cell_width <= 0 || cell_length > length ||
        cell_width > width) {
      throw std::invalid_argument("ground: subregion must fit inside region");
    }
    if (bin_width <= 0) throw std::invalid_argument("ground: bin_width > 0");
    if (ground_ratio <= 0 || ground_ratio >= 1) {
      throw std::invalid_argument("ground: ground_ratio in (0,1)");
    }
  }

  /// Cell of a point, or false if it falls outside the region.
  bool cell_of(const Point3& p, int& row, int& col) const {
    const double fx = (p.x - origin_x) / cell_length;
    const double fy = (p.y - origin_y) / cell_width;
    if (fx < 0 || fy < 0) return false;
    col = static_cast<int>(fx);
    row = static_cast<int>(fy);
    return col < cols() && row < rows();
  }
};

/// Per-subregion ground height field. Cells with no points carry kEmpty.
struct GroundGrid {
  static constexpr double kEmpty = std::numeric_limits<double>::infinity();

  GroundGridConfig cfg;
  int rows = 0, cols = 0;
  std::vector<double> heights;  // row-major, rows x cols

  double at(int row, int col) const { return heights[static_cast<std::size_t>(row) * cols + col]; }
  double& at(int row, int col) { return heights[static_cast<std::size_t>(row) * cols + col]; }
  bool empty_cell(int row, int col) const { return at(row, col) == kEmpty; }
};

/// Removal bookkeeping: gamma = N_g / N_a.
struct GroundRemovalReport {
  std::size_t removed = 0;  // N_g
  std::size_t total = 0;    // N_a
  double gamma = 0.0;
};

/// Build the PWC grid: in every subregion, the lowest height-histogram bin
/// holding at least ceil(ground_ratio * cell population) points defines the
/// cell's ground height (the bin's lower edge). Cells with points but no
/// qualifying bin fall back to the cell minimum; empty cells stay kEmpty.
inline GroundGrid build_ground_grid(const PointCloud& cloud,
                                    const GroundGridConfig& cfg,
                                    int threads = 1) {
  cfg.validate();
  GroundGrid grid;
  grid.cfg = cfg;
  grid.rows = cfg.rows();
  grid.cols = cfg.cols();
  grid.heights.assign(static_cast<std::size_t>(grid.rows) * grid.cols,
                      GroundGrid::kEmpty);

  std::vector<std::vector<float>> cell_z(grid.heights.size());
  for (const Point3& p : cloud.points) {
    int row, col;
    if (cfg.cell_of(p, row, col)) {
      cell_z[static_cast<std::size_t>(row) * grid.cols + col].push_back(
          static_cast<float>(p.z));
    }
  }

  parallel_for(grid.heights.size(), threads, [&](std::size_t c) {
    std::vector<float>& zs = cell_z[c];
    if (zs.empty()) return;
    const double z_min = *std::min_element(zs.begin(), zs.end());
    const double z_max = *std::max_element(zs.begin(), zs.end());
    const int n_bins =
        static_cast<int>((z_max - z_min) / cfg.bin_width) + 1;
    std::vector<int> hist(static_cast<std::size_t>(n_bins), 0);
    for (float z : zs) {
      int b = static_cast<int>((z - z_min) / cfg.bin_width);
      b = std::clamp(b, 0, n_bins - 1);
      ++hist[static_cast<std::size_t>(b)];
    }
    const int need = static_cast<int>(
        std::ceil(cfg.ground_ratio * static_cast<double>(zs.size())));
    double height = z_min;  // fallback: no qualifying bin
    for (int b = 0; b < n_bins; ++b) {
      if (hist[static_cast<std::size_t>(b)] >= need) {
        height = z_min + b * cfg.bin_width;
        break;
      }
    }
    grid.heights[c] = height;
  });
  return grid;
}

/// One synchronous pass of the neighborhood rule: every cell takes the
/// minimum height over itself and its 8 neighbors, ignoring empty ones.
/// Empty cells adopt the neighborhood minimum when one exists. Reads only
/// pre-pass values, so plateaus (e.g. a car roof filling a cell) are pulled
/// down to the surrounding terrain.
inline GroundGrid postprocess_grid(const GroundGrid& grid) {
  GroundGrid out = grid;
  for (int r = 0; r < grid.rows; ++r) {
    for (int c = 0; c < grid.cols; ++c) {
      double lowest = GroundGrid::kEmpty;
      for (int dr = -1; dr <= 1; ++dr) {
        for (int dc = -1; dc <= 1; ++dc) {
          const int rr = r + dr, cc = c + dc;
          if (rr < 0 || rr >= grid.rows || cc < 0 || cc >= grid.cols) continue;
          lowest = std::min(lowest, grid.at(rr, cc));
        }
      }
      out.at(r, c) = lowest;  // kEmpty only if the whole neighborhood is empty
    }
  }
  return out;
}

/// Drop points lying within D_o of their cell's ground height. Points in
/// empty cells or outside the region are kept. Survivors keep their ring
/// indices and relative order.
inline std::pair<PointCloud, GroundRemovalReport> remove_ground(
    const PointCloud& cloud, const GroundGrid& grid, double offset) {
  if (offset < 0) throw std::invalid_argument("remove_ground: offset >= 0");
  PointCloud kept;
  GroundRemovalReport report;
  report.total = cloud.size();
  kept.points.reserve(cloud.size());
  if (cloud.has_rings()) kept.ring.reserve(cloud.size());
  for (std::size_t i = 0; i < cloud.size(); ++i) {
    const Point3& p = cloud.points[i];
    int row, col;
    bool remove = false;
    if (grid.cfg.cell_of(p, row, col) && !grid.empty_cell(row, col)) {
      remove = p.z <= grid.at(row, col) + offset;
    }
    if (remove) {
      ++report.removed;
    } else {
      kept.points.push_back(p);
      if (cloud.has_rings()) kept.ring.push_back(cloud.ring[i]);
    }
  }
  report.gamma = report.total == 0
                     ? 0.0
                     : static_cast<double>(report.removed) / report.total;
  return {std::move(kept), report};
}

/// Plane a*x + b*y + c*z + d = 0 with unit normal oriented upward.
struct Plane {
  double a = 0, b = 0, c = 1, d = 0;
  double height_above(const Point3& p) const {
    return a * p.x + b * p.y + c * p.z + d;
  }
};

namespace detail {

/// Total-least-squares plane through a point subset.
inline Plane fit_plane_lsq(const PointCloud& cloud,
                           const std::vector<std::size_t>& idx) {
  double mx = 0, my = 0, mz = 0;
  for (std::size_t i : idx) {
    mx += cloud.points[i].x;
    my += cloud.points[i].y;
    mz += cloud.points[i].z;
  }
  const double n = static_cast<double>(idx.size());
  mx /= n;
  my /= n;
  mz /= n;
  double xx = 0, xy = 0, xz = 0, yy = 0, yz = 0, zz = 0;
  for (std::size_t i : idx) {
    const double dx = cloud.points[i].x - mx;
    const double dy = cloud.points[i].y - my;
    const double dz = cloud.points[i].z - mz;
    xx += dx * dx;
    xy += dx * dy;
    xz += dx * dz;
    yy += dy * dy;
    yz += dy * dz;
    zz += dz * dz;
  }
  // Smallest eigenvector of the 3x3 covariance by inverse power iteration
  // with shifts is overkill; use the cross-product form over the two larger
  // moments (stable for near-horizontal ground planes), falling back to
  // Jacobi-style iteration when degenerate.
  // det of 2x2 blocks for each candidate normal axis:
  const double det_z = xx * yy - xy * xy;
  const double det_y = xx * zz - xz * xz;
  const double det_x = yy * zz - yz * yz;
  double nx, ny, nz;
  if (det_z >= det_y && det_z >= det_x) {
    if (det_z <= 0) throw std::invalid_argument("ransac_plane: degenerate points");
    nx = (xy * yz - xz * yy) / det_z;
    ny = (xy * xz - yz * xx) / det_z;
    nz = 1.0;
  } else if (det_y >= det_x) {
    if (det_y <= 0) throw std::invalid_argument("ransac_plane: degenerate points");
    nx = (xz * yz - xy * zz) / det_y;
    nz = (xy * xz - yz * xx) / det_y;
    ny = 1.0;
  } else {
    if (det_x <= 0) throw std::invalid_argument("ransac_plane: degenerate points");
    ny = (yz * xz - xy * zz) / det_x;
    nz = (xy * yz - xz * yy) / det_x;
    nx = 1.0;
  }
  const double norm = std::sqrt(nx * nx + ny * ny + nz * nz);
  Plane plane{nx / norm, ny / norm, nz / norm, 0};
  if (plane.c < 0) {
    plane.a = -plane.a;
    plane.b = -plane.b;
    plane.c = -plane.c;
  }
  plane.d = -(plane.a * mx + plane.b * my + plane.c * mz);
  return plane;
}

}  // namespace detail

/// Classic 3-point-sample RANSAC plane fit, refined by least squares over
/// the winning consensus set. Deterministic for a fixed seed.
inline Plane ransac_plane(const PointCloud& cloud, int iterations,
                          double inlier_tol, std::uint64_t seed) {
  const std::size_t n = cloud.size();
  if (n < 3) throw std::invalid_argument("ransac_plane: need >= 3 points");
  Rng rng(seed);
  std::size_t best_count = 0;
  std::array<std::size_t, 3> best_sample{};
  for (int it = 0; it < iterations; ++it) {
    std::size_t i = static_cast<std::size_t>(rng.next_below(n));
    std::size_t j = static_cast<std::size_t>(rng.next_below(n));
    std::size_t k = static_cast<std::size_t>(rng.next_below(n));
    if (i == j || j == k || i == k) continue;
    const Point3 &p0 = cloud.points[i], &p1 = cloud.points[j],
                 &p2 = cloud.points[k];
    const double ux = p1.x - p0.x, uy = p1.y - p0.y, uz = p1.z - p0.z;
    const double vx = p2.x - p0.x, vy = p2.y - p0.y, vz = p2.z - p0.z;
    double nx = uy * vz - uz * vy;
    double ny = uz * vx - ux * vz;
    double nz = ux * vy - uy * vx;
    const double norm = std::sqrt(nx * nx + ny * ny + nz * nz);
    if (norm < 1e-12) continue;  // collinear sample
    nx /= norm;
    ny /= norm;
    nz /= norm;
    const double d = -(nx * p0.x + ny * p0.y + nz * p0.z);
    std::size_t count = 0;
    for (const Point3& p : cloud.points) {
      if (std::abs(nx * p.x + ny * p.y + nz * p.z + d) <= inlier_tol) ++count;
    }
    if (count > best_count) {
      best_count = count;
      best_sample = {i, j, k};
    }
  }
  if (best_count < 3) {
    throw std::invalid_argument("ransac_plane: all points collinear");
  }
  // Recompute the winner's inliers and refit.
  const Point3 &p0 = cloud.points[best_sample[0]],
               &p1 = cloud.points[best_sample[1]],
               &p2 = cloud.points[best_sample[2]];
  const double ux = p1.x - p0.x, uy = p1.y - p0.y, uz = p1.z - p0.z;
  const double vx = p2.x - p0.x, vy = p2.y - p0.y, vz = p2.z - p0.z;
  double nx = uy * vz - uz * vy;
  double ny = uz * vx - ux * vz;
  double nz = ux * vy - uy * vx;
  const double norm = std::sqrt(nx * nx + ny * ny + nz * nz);
  nx /= norm;
  ny /= norm;
  nz /= norm;
  const double d = -(nx * p0.x + ny * p0.y + nz * p0.z);
  std::vector<std::size_t> inliers;
  for (std::size_t i = 0; i < n; ++i) {
    const Point3& p = cloud.points[i];
    if (std::abs(nx * p.x + ny * p.y + nz * p.z + d) <= inlier_tol) {
      inliers.push_back(i);
    }
  }
  return detail::fit_plane_lsq(cloud, inliers);
}

struct GammaRow {
  double offset = 0;
  double gamma_pwc = 0;
  double gamma_plane = 0;
};

/// Removal-ratio comparison between the PWC grid and a single plane, over a
/// list of ascending offsets. Plane-based removal drops every point whose
/// signed height above the plane is <= the offset.
inline std::vector<GammaRow> gamma_sweep(const PointCloud& cloud,
                                         const GroundGrid& grid,
                                         const Plane& plane,
                                         const std::vector<double>& offsets) {
  std::vector<GammaRow> rows;
  rows.reserve(offsets.size());
  for (double offset : offsets) {
    GammaRow row;
    row.offset = offset;
    row.gamma_pwc = remove_ground(cloud, grid, offset).second.gamma;
    std::size_t removed = 0;
    for (const Point3& p : cloud.points) {
      if (plane.height_above(p) <= offset) ++removed;
    }
    row.gamma_plane =
        cloud.empty() ? 0.0 : static_cast<double>(removed) / cloud.size();
    rows.push_back(row);
  }
  return rows;
}

/// Debug dump: one `row,col,height` line per cell (empty cells say "empty").
inline void export_grid_csv(const GroundGrid& grid, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("grid csv: cannot write " + path);
  out << "row,col,height\n";
  for (int r = 0; r < grid.rows; ++r) {
    for (int c = 0; c < grid.cols; ++c) {
      out << r << ',' << c << ',';
      if (grid.empty_cell(r, c)) {
        out << "empty";
      } else {
        out << grid.at(r, c);
      }
      out << '\n';
    }
  }
}

}  // namespace pointprop

#endif  // POINTPROP_GROUND_HPP
