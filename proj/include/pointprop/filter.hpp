// SPDX-License-Identifier: Apache-2.0
// Copyright (C) 2026 the pointprop authors
//
// Background-proposal rejection: size limits, angular-span occlusion
// labelling, and a distance-dependent minimum point count taken from an
// exponential curve fitted to ground-truth statistics.

#ifndef POINTPROP_FILTER_HPP
#define POINTPROP_FILTER_HPP

#include <fstream>
#include <vector>

#include "pointprop/cluster.hpp"
#include "pointprop/core.hpp"

namespace pointprop {

/// n_min(d) = a * exp(-k * d), d = distance along x to the sensor.
struct MinPointsCurve {
  double a = 0.0;
  double k = 0.0;
  double eval(double d) const { return a * std::exp(-k * d); }
};

struct FilterParams {
  double max_length = 8.0;   // x extent cap
  double max_width = 4.0;    // y extent cap
  double min_height = 0.25;  // z extent floor
  double theta_t = 0.5 * M_PI / 180.0;  // angular padding, radians
  MinPointsCurve curve;

  void validate() const {
    if (max_length <= 0 || max_width <= 0 || min_height <= 0 || theta_t <= 0) {
      throw std::invalid_argument("filter: parameters must be positive");
    }
  }
};

/// A cluster promoted to an object hypothesis. The angular span is the
/// minimal bearing arc containing the cluster, span_lo in (-pi, pi],
/// span_hi = span_lo + width.
struct Proposal {
  Cluster cluster;
  Box3D box;
  double mean_range = 0.0;
  double span_lo = 0.0;
  double span_hi = 0.0;
  bool occluded = false;
};

inline Proposal make_proposal(const PointCloud& cloud, const Cluster& cluster) {
  Proposal prop;
  prop.cluster = cluster;
  prop.box = compute_aabb(cloud, cluster.indices);

  double range_sum = 0.0;
  std::vector<double> bearings;
  bearings.reserve(cluster.indices.size());
  for (int idx : cluster.indices) {
    const Point3& p = cloud.points[static_cast<std::size_t>(idx)];
    range_sum += p.norm();
    bearings.push_back(p.azimuth());
  }
  prop.mean_range = range_sum / static_cast<double>(cluster.indices.size());

  // Minimal circular arc: the complement of the largest bearing gap.
  std::sort(bearings.begin(), bearings.end());
  double largest_gap = 2 * M_PI - (bearings.back() - bearings.front());
  std::size_t gap_after = bearings.size() - 1;
  for (std::size_t i = 0; i + 1 < bearings.size(); ++i) {
    const double gap = bearings[i + 1] - bearings[i];
    if (gap > largest_gap) {
      largest_gap = gap;
      gap_after = i;
    }
  }
  prop.span_lo = bearings[(gap_after + 1) % bearings.size()];
  prop.span_hi = prop.span_lo + (2 * M_PI - largest_gap);
  return prop;
}

inline std::vector<Proposal> make_proposals(
    const PointCloud& cloud, const std::vector<Cluster>& clusters) {
  std::vector<Proposal> out;
  out.reserve(clusters.size());
  for (const Cluster& c : clusters) out.push_back(make_proposal(cloud, c));
  return out;
}

/// Keep proposals with length <= max_length, width <= max_width and
/// height >= min_height.
inline std::vector<Proposal> size_filter(const std::vector<Proposal>& proposals,
                                         const FilterParams& params) {
  std::vector<Proposal> kept;
  kept.reserve(proposals.size());
  for (const Proposal& p : proposals) {
    if (p.box.length() <= params.max_length &&
        p.box.width() <= params.max_width &&
        p.box.height() >= params.min_height) {
      kept.push_back(p);
    }
  }
  return kept;
}

namespace detail {

inline double wrap_angle(double a) {
  while (a > M_PI) a -= 2 * M_PI;
  while (a <= -M_PI) a += 2 * M_PI;
  return a;
}

/// Overlap of two bearing arcs after inflating each side by theta_t.
inline bool spans_overlap(const Proposal& a, const Proposal& b,
                          double theta_t) {
  const double center_a = (a.span_lo + a.span_hi) / 2;
  const double center_b = (b.span_lo + b.span_hi) / 2;
  const double half_a = (a.span_hi - a.span_lo) / 2 + theta_t;
  const double half_b = (b.span_hi - b.span_lo) / 2 + theta_t;
  if (half_a + half_b >= M_PI) return true;
  return std::abs(wrap_angle(center_a - center_b)) <= half_a + half_b;
}

}  // namespace detail

/// A proposal is non-occluded iff no other proposal's inflated span overlaps
/// its own, or it is strictly nearer than every overlapping proposal.
inline std::vector<Proposal> label_occlusion(std::vector<Proposal> proposals,
                                             double theta_t) {
  for (std::size_t i = 0; i < proposals.size(); ++i) {
    bool occluded = false;
    for (std::size_t j = 0; j < proposals.size() && !occluded; ++j) {
      if (j == i) continue;
      if (detail::spans_overlap(proposals[i], proposals[j], theta_t) &&
          !(proposals[i].mean_range < proposals[j].mean_range)) {
        occluded = true;
      }
    }
    proposals[i].occluded = occluded;
  }
  return proposals;
}

/// Fit n_min(d) = a*exp(-k*d) to ground-truth (distance, point count) pairs:
/// bin distances at `interval`, take the per-bin minimum count, and run a
/// least-squares line through (bin lower edge, log count).
inline MinPointsCurve fit_min_points_curve(
    const std::vector<std::pair<double, double>>& samples, double interval) {
  if (interval <= 0) {
    throw std::invalid_argument("min_points_curve: interval must be positive");
  }
  std::unordered_map<long long, double> bin_min;
  for (const auto& [d, m] : samples) {
    const long long bin = static_cast<long long>(std::floor(d / interval));
    auto it = bin_min.find(bin);
    if (it == bin_min.end()) {
      bin_min.emplace(bin, m);
    } else {
      it->second = std::min(it->second, m);
    }
  }
  if (bin_min.size() < 2) {
    throw std::invalid_argument("min_points_curve: need >= 2 occupied bins");
  }
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  for (const auto& [bin, m] : bin_min) {
    if (m <= 0) {
      throw std::invalid_argument("min_points_curve: nonpositive point count");
    }
    const double x = static_cast<double>(bin) * interval;
    const double y = std::log(m);
    sx += x;
    sy += y;
    sxx += x * x;
    sxy += x * y;
  }
  const double n = static_cast<double>(bin_min.size());
  const double denom = n * sxx - sx * sx;
  const double slope = (n * sxy - sx * sy) / denom;
  const double intercept = (sy - slope * sx) / n;
  if (slope >= 0) {
    throw std::invalid_argument("min_points_curve: non-decreasing fit");
  }
  return {std::exp(intercept), -slope};
}

/// Drop non-occluded proposals with fewer points than the curve demands at
/// their box-center x distance. Occluded proposals always pass.
inline std::vector<Proposal> min_points_filter(
    const std::vector<Proposal>& proposals, const MinPointsCurve& curve) {
  std::vector<Proposal> kept;
  kept.reserve(proposals.size());
  for (const Proposal& p : proposals) {
    if (!p.occluded) {
      const double need = curve.eval(p.box.center().x);
      if (static_cast<double>(p.cluster.indices.size()) < need) continue;
    }
    kept.push_back(p);
  }
  return kept;
}

inline void save_curve(const MinPointsCurve& curve, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("curve: cannot write " + path);
  out.precision(17);
  out << curve.a << ' ' << curve.k << '\n';
}

inline MinPointsCurve load_curve(const std::string& path) {
  std::ifstream in(path);
  MinPointsCurve curve;
  if (!in || !(in >> curve.a >> curve.k)) {
    throw std::runtime_error("curve: cannot read " + path);
  }
  return curve;
}

/// CSV of proposals with a kept flag: id,min_x,...,max_z,count,occluded,kept.
inline void export_proposals_csv(const std::vector<Proposal>& all,
                                 const std::vector<bool>& kept,
                                 const std::string& path) {
  if (all.size() != kept.size()) {
    throw std::invalid_argument("proposal csv: size mismatch");
  }
  std::ofstream out(path);
  if (!out) throw std::runtime_error("proposal csv: cannot write " + path);
  out << "id,min_x,min_y,min_z,max_x,max_y,max_z,count,occluded,kept\n";
  for (std::size_t i = 0; i < all.size(); ++i) {
    const Proposal& p = all[i];
    out << i << ',' << p.box.min.x << ',' << p.box.min.y << ',' << p.box.min.z
        << ',' << p.box.max.x << ',' << p.box.max.y << ',' << p.box.max.z
        << ',' << p.cluster.indices.size() << ',' << (p.occluded ? 1 : 0)
        << ',' << (kept[i] ? 1 : 0) << '\n';
  }
}

}  // namespace pointprop

#endif  // POINTPROP_FILTER_HPP
