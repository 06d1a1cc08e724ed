// SPDX-License-Identifier: Apache-2.0
// Copyright (C) 2026 the pointprop authors
//
// Two clustering backends over non-ground points: exact Euclidean
// connected components (grid-accelerated or brute force) and scan-based
// clustering that segments each LiDAR ring and merges segments across
// adjacent rings, plus a brute-force graph oracle for the latter.

#ifndef POINTPROP_CLUSTER_HPP
#define POINTPROP_CLUSTER_HPP

#include <fstream>
#include <unordered_map>
#include <vector>

#include "pointprop/core.hpp"

namespace pointprop {

struct ClusterParams {
  double t_d = 0.5;    // distance-based threshold, meters
  double h_d = 0.49;   // within-scan gap threshold, meters
  double v_d = 0.58;   // between-scan merge threshold, meters
  int mini_points = 1; // connected points required to merge two segments

  void validate() const {
    if (t_d <= 0 || h_d <= 0 || v_d <= 0) {
      throw std::invalid_argument("cluster: thresholds must be positive");
    }
    if (mini_points < 1) {
      throw std::invalid_argument("cluster: mini_points >= 1");
    }
  }
};

namespace detail {

class UnionFind {
 public:
  explicit UnionFind(std::size_t n) : parent_(n) {
    for (std::size_t i = 0; i < n; ++i) parent_[i] = i;
  }
  std::size_t find(std::size_t x) {
    while (parent_[x] != x) {
      parent_[x] = parent_[parent_[x]];
      x = parent_[x];
    }
    return x;
  }
  void unite(std::size_t a, std::size_t b) {
    a = find(a);
    b = find(b);
    if (a != b) parent_[std::max(a, b)] = std::min(a, b);
  }

 private:
  std::vector<std::size_t> parent_;
};

/// Components of a union-find over n elements, ordered by smallest member,
/// indices ascending, labels sequential.
inline std::vector<Cluster> components_of(UnionFind& uf, std::size_t n) {
  std::unordered_map<std::size_t, std::size_t> root_to_cluster;
  std::vector<Cluster> clusters;
  for (std::size_t i = 0; i < n; ++i) {
    const std::size_t root = uf.find(i);
    auto it = root_to_cluster.find(root);
    if (it == root_to_cluster.end()) {
      it = root_to_cluster.emplace(root, clusters.size()).first;
      clusters.push_back(Cluster{{}, static_cast<int>(clusters.size())});
    }
    clusters[it->second].indices.push_back(static_cast<int>(i));
  }
  return clusters;
}

struct CellKey {
  long long x, y, z;
  bool operator==(const CellKey&) const = default;
};

struct CellKeyHash {
  std::size_t operator()(const CellKey& k) const {
    std::uint64_t h = 0xcbf29ce484222325ull;
    for (long long v : {k.x, k.y, k.z}) {
      h ^= static_cast<std::uint64_t>(v);
      h *= 0x100000001b3ull;
    }
    return static_cast<std::size_t>(h);
  }
};

}  // namespace detail

/// Exact connected components of the graph joining point pairs at Euclidean
/// distance < t_d; accelerated with a uniform spatial hash of cell size t_d.
inline std::vector<Cluster> cluster_distance(const PointCloud& cloud,
                                             double t_d) {
  if (t_d <= 0) throw std::invalid_argument("cluster: t_d must be positive");
  const std::size_t n = cloud.size();
  detail::UnionFind uf(n);
  std::unordered_map<detail::CellKey, std::vector<std::size_t>,
                     detail::CellKeyHash>
      cells;
  cells.reserve(n);
  auto key_of = [&](const Point3& p) {
    return detail::CellKey{static_cast<long long>(std::floor(p.x / t_d)),
                           static_cast<long long>(std::floor(p.y / t_d)),
                           static_cast<long long>(std::floor(p.z / t_d))};
  };
  for (std::size_t i = 0; i < n; ++i) {
    cells[key_of(cloud.points[i])].push_back(i);
  }
  const double t_sq = t_d * t_d;
  for (std::size_t i = 0; i < n; ++i) {
    const Point3& p = cloud.points[i];
    const detail::CellKey base = key_of(p);
    for (long long dx = -1; dx <= 1; ++dx) {
      for (long long dy = -1; dy <= 1; ++dy) {
        for (long long dz = -1; dz <= 1; ++dz) {
          const auto it =
              cells.find({base.x + dx, base.y + dy, base.z + dz});
          if (it == cells.end()) continue;
          for (std::size_t j : it->second) {
            if (j <= i) continue;
            if (distance_sq(p, cloud.points[j]) < t_sq) uf.unite(i, j);
          }
        }
      }
    }
  }
  return detail::components_of(uf, n);
}

/// The O(n^2) form of the same partition; kept for paper-style timing
/// comparisons against the scan-based method.
inline std::vector<Cluster> cluster_distance_brute(const PointCloud& cloud,
                                                   double t_d) {
  if (t_d <= 0) throw std::invalid_argument("cluster: t_d must be positive");
  const std::size_t n = cloud.size();
  detail::UnionFind uf(n);
  const double t_sq = t_d * t_d;
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = i + 1; j < n; ++j) {
      if (distance_sq(cloud.points[i], cloud.points[j]) < t_sq) uf.unite(i, j);
    }
  }
  return detail::components_of(uf, n);
}

namespace detail {

/// Split one ring (point indices in sweep order) into line segments at gaps
/// >= h_d between consecutive points. A segment crossing the sweep seam is
/// stitched by also gap-testing the last point against the first.
inline std::vector<std::vector<int>> extract_segments(
    const PointCloud& cloud, const std::vector<int>& ring_points, double h_d) {
  std::vector<std::vector<int>> segments;
  if (ring_points.empty()) return segments;
  segments.push_back({ring_points[0]});
  for (std::size_t i = 1; i < ring_points.size(); ++i) {
    const Point3& prev = cloud.points[static_cast<std::size_t>(ring_points[i - 1])];
    const Point3& cur = cloud.points[static_cast<std::size_t>(ring_points[i])];
    if (distance(prev, cur) >= h_d) segments.emplace_back();
    segments.back().push_back(ring_points[i]);
  }
  if (segments.size() > 1) {
    const Point3& last =
        cloud.points[static_cast<std::size_t>(segments.back().back())];
    const Point3& first =
        cloud.points[static_cast<std::size_t>(segments.front().front())];
    if (distance(last, first) < h_d) {
      // Wraparound: the seam-crossing run is one segment.
      segments.back().insert(segments.back().end(), segments.front().begin(),
                             segments.front().end());
      segments.front() = std::move(segments.back());
      segments.pop_back();
    }
  }
  return segments;
}

/// Per-ring azimuth-sorted view used to find candidate partners above.
struct RingView {
  std::vector<double> az;  // ascending, in (-pi, pi]
  std::vector<int> point;  // point index
  std::vector<int> seg;    // segment id within the ring

  void build(const PointCloud& cloud,
             const std::vector<std::vector<int>>& segments) {
    az.clear();
    point.clear();
    seg.clear();
    std::size_t total = 0;
    for (const auto& s : segments) total += s.size();
    std::vector<std::size_t> order;
    order.reserve(total);
    az.reserve(total);
    point.reserve(total);
    seg.reserve(total);
    for (std::size_t si = 0; si < segments.size(); ++si) {
      for (int pi : segments[si]) {
        az.push_back(cloud.points[static_cast<std::size_t>(pi)].azimuth());
        point.push_back(pi);
        seg.push_back(static_cast<int>(si));
      }
    }
    order.resize(az.size());
    for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
    std::stable_sort(order.begin(), order.end(),
                     [&](std::size_t a, std::size_t b) { return az[a] < az[b]; });
    RingView sorted;
    sorted.az.reserve(az.size());
    sorted.point.reserve(az.size());
    sorted.seg.reserve(az.size());
    for (std::size_t i : order) {
      sorted.az.push_back(az[i]);
      sorted.point.push_back(point[i]);
      sorted.seg.push_back(seg[i]);
    }
    *this = std::move(sorted);
  }

  /// Visit every stored point whose azimuth lies within [center - delta,
  /// center + delta] on the circle.
  template <typename Fn>
  void for_candidates(double center, double delta, Fn&& fn) const {
    if (az.empty()) return;
    if (delta >= M_PI) {
      for (std::size_t i = 0; i < az.size(); ++i) fn(point[i], seg[i]);
      return;
    }
    auto scan = [&](double lo, double hi) {
      const auto begin =
          std::lower_bound(az.begin(), az.end(), lo) - az.begin();
      const auto end = std::upper_bound(az.begin(), az.end(), hi) - az.begin();
      for (auto i = begin; i < end; ++i) {
        fn(point[static_cast<std::size_t>(i)], seg[static_cast<std::size_t>(i)]);
      }
    };
    double lo = center - delta, hi = center + delta;
    if (lo < -M_PI) {
      scan(-M_PI, hi);
      scan(lo + 2 * M_PI, M_PI);
    } else if (hi > M_PI) {
      scan(lo, M_PI);
      scan(-M_PI, hi - 2 * M_PI);
    } else {
      scan(lo, hi);
    }
  }
};

/// Azimuth half-window that certainly contains every point within v_d of p:
/// any point at bearing offset D from p is at distance >= range(p)*sin(D).
inline double azimuth_window(const Point3& p, double v_d) {
  const double range = p.range_xy();
  if (range <= v_d) return M_PI;
  return std::asin(v_d / range) + 1e-9;
}

}  // namespace detail

/// Scan-based clustering: rings are cut into line segments (gap >= h_d), and
/// a segment merges into a segment of the ring above when at least
/// mini_points of its points lie within v_d of that segment. Multi-way
/// connections collapse onto the smallest label, with the merge propagated
/// into both the previous-ring map and the global map. Rings are processed
/// from the top scan downward.
inline std::vector<Cluster> cluster_scan(const PointCloud& cloud,
                                         const ClusterParams& params) {
  params.validate();
  if (!cloud.has_rings()) throw std::invalid_argument("rings required");
  if (cloud.empty()) return {};

  const int max_ring = *std::max_element(cloud.ring.begin(), cloud.ring.end());
  std::vector<std::vector<int>> rings(static_cast<std::size_t>(max_ring) + 1);
  for (std::size_t i = 0; i < cloud.size(); ++i) {
    rings[static_cast<std::size_t>(cloud.ring[i])].push_back(static_cast<int>(i));
  }

  std::unordered_map<int, std::vector<int>> global;  // label -> point indices
  int next_label = 0;

  detail::RingView above_view;           // ring r+1
  std::vector<int> above_labels;         // per segment of ring r+1
  const double v_sq = params.v_d * params.v_d;

  std::vector<int> seg_count;   // hits per above segment (current segment scope)
  std::vector<int> seg_stamp;   // point stamp for once-per-point counting
  std::vector<int> touched;

  for (int r = max_ring; r >= 0; --r) {
    const auto segments = detail::extract_segments(
        cloud, rings[static_cast<std::size_t>(r)], params.h_d);
    std::vector<int> labels(segments.size(), -1);

    seg_count.assign(above_labels.size(), 0);
    seg_stamp.assign(above_labels.size(), -1);

    for (std::size_t j = 0; j < segments.size(); ++j) {
      // Count, per above segment, how many of this segment's points have a
      // partner within v_d in it.
      touched.clear();
      int stamp = 0;
      for (int pi : segments[j]) {
        const Point3& p = cloud.points[static_cast<std::size_t>(pi)];
        const double window = detail::azimuth_window(p, params.v_d);
        above_view.for_candidates(
            p.azimuth(), window, [&](int qi, int qseg) {
              if (seg_stamp[static_cast<std::size_t>(qseg)] == stamp) return;
              if (distance_sq(p, cloud.points[static_cast<std::size_t>(qi)]) <
                  v_sq) {
                seg_stamp[static_cast<std::size_t>(qseg)] = stamp;
                if (seg_count[static_cast<std::size_t>(qseg)]++ == 0) {
                  touched.push_back(qseg);
                }
              }
            });
        ++stamp;
      }

      std::vector<int> connected;  // distinct labels of connected above segs
      for (int qseg : touched) {
        if (seg_count[static_cast<std::size_t>(qseg)] >= params.mini_points) {
          const int lbl = above_labels[static_cast<std::size_t>(qseg)];
          if (std::find(connected.begin(), connected.end(), lbl) ==
              connected.end()) {
            connected.push_back(lbl);
          }
        }
        seg_count[static_cast<std::size_t>(qseg)] = 0;  // reset for next segment
        seg_stamp[static_cast<std::size_t>(qseg)] = -1;
      }

      int label;
      if (connected.empty()) {
        label = next_label++;
      } else if (connected.size() == 1) {
        label = connected[0];
      } else {
        label = *std::min_element(connected.begin(), connected.end());
        for (int other : connected) {
          if (other == label) continue;
          auto& dst = global[label];
          auto& src = global[other];
          dst.insert(dst.end(), src.begin(), src.end());
          global.erase(other);
          for (int& l : above_labels) {
            if (l == other) l = label;
          }
          for (int& l : labels) {
            if (l == other) l = label;
          }
        }
      }
      labels[j] = label;
      auto& dst = global[label];
      dst.insert(dst.end(), segments[j].begin(), segments[j].end());
    }

    above_view.build(cloud, segments);
    above_labels = std::move(labels);
  }

  // Stable output: clusters ordered by smallest point index.
  std::vector<Cluster> clusters;
  clusters.reserve(global.size());
  for (auto& [label, pts] : global) {
    std::sort(pts.begin(), pts.end());
    clusters.push_back(Cluster{std::move(pts), 0});
  }
  std::sort(clusters.begin(), clusters.end(),
            [](const Cluster& a, const Cluster& b) {
              return a.indices.front() < b.indices.front();
            });
  for (std::size_t i = 0; i < clusters.size(); ++i) {
    clusters[i].label = static_cast<int>(i);
  }
  return clusters;
}

/// Brute-force reference for cluster_scan: build the explicit segment graph
/// (same segment extraction, same adjacency rule) and return its connected
/// components. Quadratic; for tests.
inline std::vector<Cluster> scan_oracle(const PointCloud& cloud,
                                        const ClusterParams& params) {
  params.validate();
  if (!cloud.has_rings()) throw std::invalid_argument("rings required");
  if (cloud.empty()) return {};

  const int max_ring = *std::max_element(cloud.ring.begin(), cloud.ring.end());
  std::vector<std::vector<int>> rings(static_cast<std::size_t>(max_ring) + 1);
  for (std::size_t i = 0; i < cloud.size(); ++i) {
    rings[static_cast<std::size_t>(cloud.ring[i])].push_back(static_cast<int>(i));
  }

  struct Segment {
    int ring;
    std::vector<int> points;
  };
  std::vector<Segment> segs;
  for (int r = 0; r <= max_ring; ++r) {
    for (auto& s : detail::extract_segments(
             cloud, rings[static_cast<std::size_t>(r)], params.h_d)) {
      segs.push_back({r, std::move(s)});
    }
  }

  const double v_sq = params.v_d * params.v_d;
  detail::UnionFind uf(segs.size());
  for (std::size_t a = 0; a < segs.size(); ++a) {
    for (std::size_t b = 0; b < segs.size(); ++b) {
      // Directed rule: lower segment `a` connects upward into `b`.
      if (segs[b].ring != segs[a].ring + 1) continue;
      int close_points = 0;
      for (int pi : segs[a].points) {
        const Point3& p = cloud.points[static_cast<std::size_t>(pi)];
        for (int qi : segs[b].points) {
          if (distance_sq(p, cloud.points[static_cast<std::size_t>(qi)]) < v_sq) {
            ++close_points;
            break;
          }
        }
      }
      if (close_points >= params.mini_points) uf.unite(a, b);
    }
  }

  std::unordered_map<std::size_t, std::size_t> root_to_cluster;
  std::vector<Cluster> clusters;
  for (std::size_t s = 0; s < segs.size(); ++s) {
    const std::size_t root = uf.find(s);
    auto it = root_to_cluster.find(root);
    if (it == root_to_cluster.end()) {
      it = root_to_cluster.emplace(root, clusters.size()).first;
      clusters.push_back(Cluster{{}, static_cast<int>(clusters.size())});
    }
    clusters[it->second].indices.insert(clusters[it->second].indices.end(),
                                        segs[s].points.begin(),
                                        segs[s].points.end());
  }
  for (auto& c : clusters) std::sort(c.indices.begin(), c.indices.end());
  std::sort(clusters.begin(), clusters.end(),
            [](const Cluster& a, const Cluster& b) {
              return a.indices.front() < b.indices.front();
            });
  for (std::size_t i = 0; i < clusters.size(); ++i) {
    clusters[i].label = static_cast<int>(i);
  }
  return clusters;
}

/// Label-free canonical form for comparing partitions.
inline std::vector<std::vector<int>> canonical_partition(
    const std::vector<Cluster>& clusters) {
  std::vector<std::vector<int>> result;
  result.reserve(clusters.size());
  for (const Cluster& c : clusters) {
    std::vector<int> idx = c.indices;
    std::sort(idx.begin(), idx.end());
    result.push_back(std::move(idx));
  }
  std::sort(result.begin(), result.end());
  return result;
}

/// Dump `point_index,cluster_id` rows.
inline void export_clusters_csv(const std::vector<Cluster>& clusters,
                                const std::string& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cluster csv: cannot write " + path);
  out << "point_index,cluster_id\n";
  for (const Cluster& c : clusters) {
    for (int idx : c.indices) out << idx << ',' << c.label << '\n';
  }
}

}  // namespace pointprop

#endif  // POINTPROP_CLUSTER_HPP
