// SPDX-License-Identifier: Apache-2.0
// Copyright (C) 2026 the pointprop authors

#ifndef POINTPROP_CORE_HPP
#define POINTPROP_CORE_HPP

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <stdexcept>
#include <string>
#include <vector>

namespace pointprop {

/// A single LiDAR return in the sensor frame (x forward, y left, z up),
/// coordinates in meters, reflectance in [0,1].
struct Point3 {
  double x = 0.0;
  double y = 0.0;
  double z = 0.0;
  float intensity = 0.0f;

  double norm() const { return std::sqrt(x * x + y * y + z * z); }
  double range_xy() const { return std::sqrt(x * x + y * y); }
  /// Horizontal bearing about the sensor, in (-pi, pi].
  double azimuth() const { return std::atan2(y, x); }
  /// Elevation above the horizontal plane through the sensor.
  double vertical_angle() const { return std::atan2(z, range_xy()); }

  bool finite() const {
    return std::isfinite(x) && std::isfinite(y) && std::isfinite(z);
  }
};

inline double distance(const Point3& a, const Point3& b) {
  const double dx = a.x - b.x, dy = a.y - b.y, dz = a.z - b.z;
  return std::sqrt(dx * dx + dy * dy + dz * dz);
}

inline double distance_sq(const Point3& a, const Point3& b) {
  const double dx = a.x - b.x, dy = a.y - b.y, dz = a.z - b.z;
  return dx * dx + dy * dy + dz * dz;
}

/// An ordered point set. `ring` is either empty or aligned 1:1 with
/// `points`; within one ring, points keep the sensor sweep order.
struct PointCloud {
  std::vector<Point3> points;
  std::vector<int> ring;

  std::size_t size() const { return points.size(); }
  bool empty() const { return points.empty(); }
  bool has_rings() const { return !ring.empty(); }
};

/// Axis-aligned box in the sensor frame, min <= max componentwise.
struct Box3D {
  Point3 min;
  Point3 max;

  double length() const { return max.x - min.x; }  // x extent
  double width() const { return max.y - min.y; }   // y extent
  double height() const { return max.z - min.z; }  // z extent
  double volume() const { return length() * width() * height(); }

  Point3 center() const {
    return {(min.x + max.x) / 2, (min.y + max.y) / 2, (min.z + max.z) / 2};
  }

  bool contains(const Point3& p) const {
    return p.x >= min.x && p.x <= max.x && p.y >= min.y && p.y <= max.y &&
           p.z >= min.z && p.z <= max.z;
  }

  bool valid() const {
    return min.x <= max.x && min.y <= max.y && min.z <= max.z;
  }
};

/// A group of point indices into some source cloud.
struct Cluster {
  std::vector<int> indices;
  int label = 0;
};

/// Componentwise min/max box of the selected points.
inline Box3D compute_aabb(const PointCloud& cloud,
                          const std::vector<int>& indices) {
  if (indices.empty()) throw std::invalid_argument("empty cluster");
  Box3D box;
  const Point3& first = cloud.points.at(static_cast<std::size_t>(indices[0]));
  box.min = first;
  box.max = first;
  for (int idx : indices) {
    const Point3& p = cloud.points.at(static_cast<std::size_t>(idx));
    box.min.x = std::min(box.min.x, p.x);
    box.min.y = std::min(box.min.y, p.y);
    box.min.z = std::min(box.min.z, p.z);
    box.max.x = std::max(box.max.x, p.x);
    box.max.y = std::max(box.max.y, p.y);
    box.max.z = std::max(box.max.z, p.z);
  }
  return box;
}

// ---------------------------------------------------------------------------
// Deterministic random numbers.
//
// std::uniform_*_distribution is implementation-defined; everything that has
// to reproduce bit-exactly across builds draws through this wrapper instead.
// ---------------------------------------------------------------------------

inline std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ull;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ull;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebull;
  return x ^ (x >> 31);
}

/// xoshiro256** generator with hand-rolled distributions.
class Rng {
 public:
  explicit Rng(std::uint64_t seed = 1) {
    std::uint64_t x = seed;
    for (auto& word : state_) word = (x = splitmix64(x));
  }

  /// Derive an independent stream, e.g. one per particle or per frame.
  Rng substream(std::uint64_t salt) const {
    return Rng(splitmix64(state_[0] ^ splitmix64(salt + 0x632be59bd9b4e019ull)));
  }

  std::uint64_t next_u64() {
    const std::uint64_t result = rotl(state_[1] * 5, 7) * 9;
    const std::uint64_t t = state_[1] << 17;
    state_[2] ^= state_[0];
    state_[3] ^= state_[1];
    state_[1] ^= state_[2];
    state_[0] ^= state_[3];
    state_[2] ^= t;
    state_[3] = rotl(state_[3], 45);
    return result;
  }

  /// Uniform in [0, 1).
  double uniform() {
    return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
  }

  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

  /// Uniform integer in [0, n), n >= 1. Rejection sampling, unbiased.
  std::uint64_t next_below(std::uint64_t n) {
    const std::uint64_t threshold = (0 - n) % n;
    for (;;) {
      const std::uint64_t r = next_u64();
      if (r >= threshold) return r % n;
    }
  }

  /// Standard normal via Box-Muller (deterministic, no cached spare).
  double normal() {
    double u1 = uniform();
    while (u1 <= 0.0) u1 = uniform();
    const double u2 = uniform();
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * M_PI * u2);
  }

  template <typename T>
  void shuffle(std::vector<T>& v) {
    for (std::size_t i = v.size(); i > 1; --i) {
      std::swap(v[i - 1], v[static_cast<std::size_t>(next_below(i))]);
    }
  }

 private:
  static std::uint64_t rotl(std::uint64_t x, int k) {
    return (x << k) | (x >> (64 - k));
  }
  std::uint64_t state_[4];
};

/// Resample a point list to exactly `n` points: without replacement when the
/// input is large enough, with replacement otherwise.
inline std::vector<Point3> sample_points(const std::vector<Point3>& points,
                                         std::size_t n, std::uint64_t seed) {
  if (points.empty()) throw std::invalid_argument("sample_points: empty input");
  if (n == 0) throw std::invalid_argument("sample_points: n must be >= 1");
  Rng rng(seed);
  std::vector<Point3> out;
  out.reserve(n);
  if (points.size() >= n) {
    // Partial Fisher-Yates over an index vector.
    std::vector<std::uint32_t> idx(points.size());
    for (std::size_t i = 0; i < idx.size(); ++i) idx[i] = static_cast<std::uint32_t>(i);
    for (std::size_t i = 0; i < n; ++i) {
      const std::size_t j = i + static_cast<std::size_t>(rng.next_below(idx.size() - i));
      std::swap(idx[i], idx[j]);
      out.push_back(points[idx[i]]);
    }
  } else {
    for (std::size_t i = 0; i < n; ++i) {
      out.push_back(points[static_cast<std::size_t>(rng.next_below(points.size()))]);
    }
  }
  return out;
}

}  // namespace pointprop

#endif  // POINTPROP_CORE_HPP
