// SPDX-License-Identifier: Apache-2.0
// Copyright (C) 2026 the pointprop authors
//
// KITTI-format loaders (velodyne .bin, label_2, calib) and scan-ring
// recovery for clouds that do not store ring indices.

#ifndef POINTPROP_INGEST_HPP
#define POINTPROP_INGEST_HPP

#include <array>
#include <cstring>
#include <fstream>
#include <numeric>
#include <sstream>
#include <string>
#include <vector>

#include "pointprop/core.hpp"

namespace pointprop {

enum class ObjectClass : int {
  Background = 0,
  Car = 1,
  Pedestrian = 2,
  Van = 3,
  Cyclist = 4,
};

inline const char* to_string(ObjectClass c) {
  switch (c) {
    case ObjectClass::Car: return "Car";
    case ObjectClass::Pedestrian: return "Pedestrian";
    case ObjectClass::Van: return "Van";
    case ObjectClass::Cyclist: return "Cyclist";
    default: return "Background";
  }
}

/// Whether the class is one of the four objects of interest (everything the
/// recall metric counts; Background covers all other labels).
inline bool is_object_of_interest(ObjectClass c) {
  return c != ObjectClass::Background;
}

/// An annotated object in the sensor frame. `box` is the axis-aligned hull
/// of the (possibly rotated) source box; the raw camera-frame fields are
/// kept for audit.
struct GroundTruthObject {
  ObjectClass cls = ObjectClass::Background;
  Box3D box;
  Point3 center;
  // Source annotation as given (camera frame), for audit.
  std::string source_type;
  double source_h = 0, source_w = 0, source_l = 0;
  double source_x = 0, source_y = 0, source_z = 0;
  double source_ry = 0;
};

struct CalibrationSet {
  std::array<double, 12> velo_to_cam{1, 0, 0, 0, 0, 1, 0, 0, 0, 0, 1, 0};
  std::array<double, 9> rect{1, 0, 0, 0, 1, 0, 0, 0, 1};
  std::array<double, 12> projection{1, 0, 0, 0, 0, 1, 0, 0, 0, 0, 1, 0};
};

namespace detail {

inline bool orthonormal(const double* r, double tol) {
  // rows of a 3x3 block, row-major
  for (int i = 0; i < 3; ++i) {
    for (int j = 0; j < 3; ++j) {
      double dot = 0;
      for (int k = 0; k < 3; ++k) dot += r[3 * i + k] * r[3 * j + k];
      const double want = (i == j) ? 1.0 : 0.0;
      if (std::abs(dot - want) > tol) return false;
    }
  }
  return true;
}

}  // namespace detail

inline void validate_calibration(const CalibrationSet& c) {
  double rot[9];
  for (int i = 0; i < 3; ++i)
    for (int j = 0; j < 3; ++j) rot[3 * i + j] = c.velo_to_cam[4 * i + j];
  if (!detail::orthonormal(c.rect.data(), 1e-4) ||
      !detail::orthonormal(rot, 1e-4)) {
    throw std::runtime_error("calibration: rotation block not orthonormal");
  }
}

/// Parse a KITTI calib file (keys like "R0_rect:", "Tr_velo_to_cam:", "P2:").
inline CalibrationSet load_calib(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("calib: cannot open " + path);
  CalibrationSet calib;
  std::string line;
  while (std::getline(in, line)) {
    std::istringstream ls(line);
    std::string key;
    if (!(ls >> key)) continue;
    if (!key.empty() && key.back() == ':') key.pop_back();
    std::vector<double> vals;
    double v;
    while (ls >> v) vals.push_back(v);
    if ((key == "R0_rect" || key == "R_rect") && vals.size() >= 9) {
      std::copy_n(vals.begin(), 9, calib.rect.begin());
    } else if (key == "Tr_velo_to_cam" && vals.size() >= 12) {
      std::copy_n(vals.begin(), 12, calib.velo_to_cam.begin());
    } else if (key == "P2" && vals.size() >= 12) {
      std::copy_n(vals.begin(), 12, calib.projection.begin());
    }
  }
  validate_calibration(calib);
  return calib;
}

/// Load a packed little-endian float32 x,y,z,reflectance file.
inline PointCloud load_velodyne(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("velodyne: cannot open " + path);
  in.seekg(0, std::ios::end);
  const std::streamoff bytes = in.tellg();
  in.seekg(0, std::ios::beg);
  if (bytes % 16 != 0) {
    throw std::runtime_error("velodyne: file size not a multiple of 16: " + path);
  }
  const std::size_t n = static_cast<std::size_t>(bytes) / 16;
  std::vector<float> raw(n * 4);
  if (n > 0) {
    in.read(reinterpret_cast<char*>(raw.data()), bytes);
    if (!in) throw std::runtime_error("velodyne: short read: " + path);
  }
  PointCloud cloud;
  cloud.points.reserve(n);
  for (std::size_t i = 0; i < n; ++i) {
    Point3 p{raw[4 * i], raw[4 * i + 1], raw[4 * i + 2], raw[4 * i + 3]};
    if (!p.finite() || !std::isfinite(p.intensity)) {
      throw std::runtime_error("velodyne: non-finite record " +
                               std::to_string(i) + " in " + path);
    }
    cloud.points.push_back(p);
  }
  return cloud;
}

inline void save_velodyne(const std::string& path, const PointCloud& cloud) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("velodyne: cannot write " + path);
  std::vector<float> raw;
  raw.reserve(cloud.size() * 4);
  for (const Point3& p : cloud.points) {
    raw.push_back(static_cast<float>(p.x));
    raw.push_back(static_cast<float>(p.y));
    raw.push_back(static_cast<float>(p.z));
    raw.push_back(p.intensity);
  }
  out.write(reinterpret_cast<const char*>(raw.data()),
            static_cast<std::streamsize>(raw.size() * sizeof(float)));
}

inline ObjectClass class_from_kitti_type(const std::string& type) {
  if (type == "Car") return ObjectClass::Car;
  if (type == "Van") return ObjectClass::Van;
  if (type == "Pedestrian") return ObjectClass::Pedestrian;
  if (type == "Cyclist") return ObjectClass::Cyclist;
  return ObjectClass::Background;  // Truck, Misc, Tram, Person_sitting, ...
}

/// Parse a KITTI label_2 file and express each box as a sensor-frame AABB.
/// Camera-frame boxes (h, w, l, location, ry) are expanded to their 8
/// corners, mapped through the inverse rectified calibration, and hulled.
/// "DontCare" rows are dropped.
inline std::vector<GroundTruthObject> load_labels(const std::string& path,
                                                  const CalibrationSet& calib) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("labels: cannot open " + path);
  validate_calibration(calib);

  // Inverses: p_velo = Tr^-1 * (R0^-1 * p_rect).
  const auto& tr = calib.velo_to_cam;
  const auto& r0 = calib.rect;
  auto rect_to_velo = [&](const std::array<double, 3>& pr) {
    std::array<double, 3> pc{};  // R0^T * p_rect (R0 orthonormal)
    for (int i = 0; i < 3; ++i)
      pc[i] = r0[i] * pr[0] + r0[3 + i] * pr[1] + r0[6 + i] * pr[2];
    std::array<double, 3> pv{};  // R^T * (pc - t)
    const double d0 = pc[0] - tr[3], d1 = pc[1] - tr[7], d2 = pc[2] - tr[11];
    for (int i = 0; i < 3; ++i)
      pv[i] = tr[i] * d0 + tr[4 + i] * d1 + tr[8 + i] * d2;
    return pv;
  };

  std::vector<GroundTruthObject> objects;
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    std::istringstream ls(line);
    std::string type;
    double trunc, occl, alpha, b0, b1, b2, b3, h, w, l, x, y, z, ry;
    if (!(ls >> type >> trunc >> occl >> alpha >> b0 >> b1 >> b2 >> b3 >> h >>
          w >> l >> x >> y >> z >> ry)) {
      throw std::runtime_error("labels: malformed line " +
                               std::to_string(line_no) + " in " + path);
    }
    if (type == "DontCare") continue;

    GroundTruthObject obj;
    obj.cls = class_from_kitti_type(type);
    obj.source_type = type;
    obj.source_h = h;
    obj.source_w = w;
    obj.source_l = l;
    obj.source_x = x;
    obj.source_y = y;
    obj.source_z = z;
    obj.source_ry = ry;

    // Camera-frame corners: x right, y down (box bottom at y=0), z forward.
    const double c = std::cos(ry), s = std::sin(ry);
    bool first = true;
    for (int ix : {-1, 1}) {
      for (int iy : {0, 1}) {
        for (int iz : {-1, 1}) {
          const double cx = ix * l / 2, cy = -iy * h, cz = iz * w / 2;
          const std::array<double, 3> pr{c * cx + s * cz + x, cy + y,
                                         -s * cx + c * cz + z};
          const auto pv = rect_to_velo(pr);
          const Point3 p{pv[0], pv[1], pv[2]};
          if (first) {
            obj.box.min = obj.box.max = p;
            first = false;
          } else {
            obj.box.min.x = std::min(obj.box.min.x, p.x);
            obj.box.min.y = std::min(obj.box.min.y, p.y);
            obj.box.min.z = std::min(obj.box.min.z, p.z);
            obj.box.max.x = std::max(obj.box.max.x, p.x);
            obj.box.max.y = std::max(obj.box.max.y, p.y);
            obj.box.max.z = std::max(obj.box.max.z, p.z);
          }
        }
      }
    }
    obj.center = obj.box.center();
    objects.push_back(std::move(obj));
  }
  return objects;
}

/// Assign a ring index per point by quantizing the vertical angle into
/// `n_rings` bins between the observed extremes, then order each ring by
/// azimuth. Ring 0 is the lowest elevation.
inline PointCloud recover_rings(const PointCloud& cloud, int n_rings) {
  if (cloud.empty()) throw std::invalid_argument("recover_rings: empty cloud");
  if (n_rings < 1) throw std::invalid_argument("recover_rings: n_rings >= 1");

  const std::size_t n = cloud.size();
  std::vector<double> vert(n), azim(n);
  double lo = std::numeric_limits<double>::infinity();
  double hi = -std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < n; ++i) {
    vert[i] = cloud.points[i].vertical_angle();
    azim[i] = cloud.points[i].azimuth();
    lo = std::min(lo, vert[i]);
    hi = std::max(hi, vert[i]);
  }
  const double span = hi - lo;
  std::vector<int> ring(n, 0);
  if (span > 0) {
    for (std::size_t i = 0; i < n; ++i) {
      int r = static_cast<int>((vert[i] - lo) / span * n_rings);
      ring[i] = std::min(r, n_rings - 1);
    }
  }

  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) {
                     if (ring[a] != ring[b]) return ring[a] < ring[b];
                     return azim[a] < azim[b];
                   });

  PointCloud out;
  out.points.reserve(n);
  out.ring.reserve(n);
  for (std::size_t i : order) {
    out.points.push_back(cloud.points[i]);
    out.ring.push_back(ring[i]);
  }
  return out;
}

}  // namespace pointprop

#endif  // POINTPROP_INGEST_HPP
