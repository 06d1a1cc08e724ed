// SPDX-License-Identifier: Apache-2.0
// Copyright (C) 2026 the pointprop authors
//
// Deterministic synthetic LiDAR scenes: ray-cast piecewise-planar terrain
// plus simple object primitives, with per-point ground/object tags. Used as
// the ground-truth oracle for segmentation and classification tests.

#ifndef POINTPROP_SYNTHETIC_HPP
#define POINTPROP_SYNTHETIC_HPP

#include <fstream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "pointprop/core.hpp"
#include "pointprop/ingest.hpp"

namespace pointprop {

/// One terrain patch: plane z = a*x + b*y + c over an xy rectangle.
struct TerrainPatch {
  double x0 = 0, x1 = 0, y0 = 0, y1 = 0;
  double a = 0, b = 0, c = 0;

  double z_at(double x, double y) const { return a * x + b * y + c; }
  bool contains(double x, double y) const {
    return x >= x0 && x < x1 && y >= y0 && y < y1;
  }
};

enum class ShapeKind { Box, Cylinder, LShape };

/// An object standing on the terrain. Boxes and L-shapes are axis-aligned;
/// `clearance` lifts the solid part off the ground the way real vehicles
/// and pedestrians present to a LiDAR (few returns near z=0).
struct SceneObjectSpec {
  ObjectClass cls = ObjectClass::Car;
  ShapeKind shape = ShapeKind::Box;
  double cx = 0, cy = 0;
  double length = 4.2, width = 1.8, height = 1.5;
  double radius = 0.3;     // cylinders only
  double clearance = 0.3;  // gap between terrain and solid bottom
};

inline SceneObjectSpec make_car(double cx, double cy) {
  return {ObjectClass::Car, ShapeKind::Box, cx, cy, 4.2, 1.8, 1.5, 0.3, 0.3};
}
inline SceneObjectSpec make_van(double cx, double cy) {
  return {ObjectClass::Van, ShapeKind::Box, cx, cy, 5.4, 2.0, 2.2, 0.3, 0.3};
}
inline SceneObjectSpec make_pedestrian(double cx, double cy) {
  return {ObjectClass::Pedestrian, ShapeKind::Cylinder, cx, cy,
          0.6,  0.6,  1.75, 0.3, 0.25};
}
inline SceneObjectSpec make_cyclist(double cx, double cy) {
  return {ObjectClass::Cyclist, ShapeKind::LShape, cx, cy, 1.8, 0.5, 1.7,
          0.3,  0.25};
}
/// Background clutter (walls, slabs, debris) with explicit dimensions.
inline SceneObjectSpec make_clutter(double cx, double cy, double l, double w,
                                    double h, double clearance = 0.0) {
  return {ObjectClass::Background, ShapeKind::Box, cx, cy, l, w, h, 0.3,
          clearance};
}

struct SceneSpec {
  double x_min = 0, x_max = 70, y_min = -40, y_max = 40;
  double sensor_height = 1.8;
  std::vector<double> ring_angles;  // radians, ascending elevation
  double azimuth_start = 0.0;       // radians; sweep is counterclockwise
  double azimuth_end = 2.0 * M_PI;
  double azimuth_step = 0.35 * M_PI / 180.0;
  double noise_sigma = 0.02;  // uniform z jitter half-width, meters
  std::uint64_t seed = 1;
  std::vector<TerrainPatch> terrain;
  std::vector<SceneObjectSpec> objects;

  /// Append `count` uniformly spaced ring elevations over [lo_deg, hi_deg].
  void add_ring_band_deg(double lo_deg, double hi_deg, int count) {
    for (int i = 0; i < count; ++i) {
      const double f = (count == 1) ? 0.0 : static_cast<double>(i) / (count - 1);
      ring_angles.push_back((lo_deg + f * (hi_deg - lo_deg)) * M_PI / 180.0);
    }
  }
};

struct SyntheticScene {
  PointCloud cloud;                       // ring indices present
  std::vector<GroundTruthObject> objects; // one per scene object, in spec order
  std::vector<TerrainPatch> terrain;
  std::vector<int> point_tag;  // aligned with cloud.points; -1 ground, else object index
};

namespace detail {

struct Solid {
  std::vector<Box3D> boxes;
  bool has_cylinder = false;
  double cyl_cx = 0, cyl_cy = 0, cyl_r = 0, cyl_z0 = 0, cyl_z1 = 0;
};

inline Box3D union_aabb(const Solid& s) {
  Box3D out;
  bool first = true;
  auto grow = [&](const Box3D& b) {
    if (first) {
      out = b;
      first = false;
      return;
    }
    out.min.x = std::min(out.min.x, b.min.x);
    out.min.y = std::min(out.min.y, b.min.y);
    out.min.z = std::min(out.min.z, b.min.z);
    out.max.x = std::max(out.max.x, b.max.x);
    out.max.y = std::max(out.max.y, b.max.y);
    out.max.z = std::max(out.max.z, b.max.z);
  };
  for (const Box3D& b : s.boxes) grow(b);
  if (s.has_cylinder) {
    grow(Box3D{{s.cyl_cx - s.cyl_r, s.cyl_cy - s.cyl_r, s.cyl_z0},
               {s.cyl_cx + s.cyl_r, s.cyl_cy + s.cyl_r, s.cyl_z1}});
  }
  return out;
}

inline Solid build_solid(const SceneObjectSpec& o, double ground_z) {
  Solid s;
  const double z0 = ground_z + o.clearance;
  switch (o.shape) {
    case ShapeKind::Box:
      s.boxes.push_back({{o.cx - o.length / 2, o.cy - o.width / 2, z0},
                         {o.cx + o.length / 2, o.cy + o.width / 2,
                          ground_z + o.height}});
      break;
    case ShapeKind::Cylinder:
      s.has_cylinder = true;
      s.cyl_cx = o.cx;
      s.cyl_cy = o.cy;
      s.cyl_r = o.radius;
      s.cyl_z0 = z0;
      s.cyl_z1 = ground_z + o.height;
      break;
    case ShapeKind::LShape: {
      // Long low part plus a tall part over the rear half.
      const double mid_z = ground_z + 0.55 * o.height;
      s.boxes.push_back({{o.cx - o.length / 2, o.cy - o.width / 2, z0},
                         {o.cx + o.length / 2, o.cy + o.width / 2, mid_z}});
      s.boxes.push_back({{o.cx - o.length / 2, o.cy - o.width / 2, mid_z},
                         {o.cx, o.cy + o.width / 2, ground_z + o.height}});
      break;
    }
  }
  return s;
}

inline std::optional<double> ray_box(const Point3& o, const Point3& d,
                                     const Box3D& b) {
  double t0 = 0.0, t1 = std::numeric_limits<double>::infinity();
  const double og[3] = {o.x, o.y, o.z};
  const double dg[3] = {d.x, d.y, d.z};
  const double lo[3] = {b.min.x, b.min.y, b.min.z};
  const double hi[3] = {b.max.x, b.max.y, b.max.z};
  for (int i = 0; i < 3; ++i) {
    if (std::abs(dg[i]) < 1e-15) {
      if (og[i] < lo[i] || og[i] > hi[i]) return std::nullopt;
      continue;
    }
    double ta = (lo[i] - og[i]) / dg[i];
    double tb = (hi[i] - og[i]) / dg[i];
    if (ta > tb) std::swap(ta, tb);
    t0 = std::max(t0, ta);
    t1 = std::min(t1, tb);
    if (t0 > t1) return std::nullopt;
  }
  if (t0 <= 1e-9) return std::nullopt;  // sensor inside or behind
  return t0;
}

inline std::optional<double> ray_solid(const Point3& o, const Point3& d,
                                       const Solid& s) {
  std::optional<double> best;
  auto consider = [&](double t) {
    if (!best || t < *best) best = t;
  };
  for (const Box3D& b : s.boxes) {
    if (auto t = ray_box(o, d, b)) consider(*t);
  }
  if (s.has_cylinder) {
    // Side surface.
    const double ex = o.x - s.cyl_cx, ey = o.y - s.cyl_cy;
    const double a = d.x * d.x + d.y * d.y;
    const double bq = 2 * (ex * d.x + ey * d.y);
    const double cq = ex * ex + ey * ey - s.cyl_r * s.cyl_r;
    const double disc = bq * bq - 4 * a * cq;
    if (a > 1e-15 && disc >= 0) {
      const double sq = std::sqrt(disc);
      for (double t : {(-bq - sq) / (2 * a), (-bq + sq) / (2 * a)}) {
        if (t > 1e-9) {
          const double z = o.z + t * d.z;
          if (z >= s.cyl_z0 && z <= s.cyl_z1) consider(t);
        }
      }
    }
    // Top cap.
    if (d.z < -1e-15) {
      const double t = (s.cyl_z1 - o.z) / d.z;
      if (t > 1e-9) {
        const double x = o.x + t * d.x - s.cyl_cx;
        const double y = o.y + t * d.y - s.cyl_cy;
        if (x * x + y * y <= s.cyl_r * s.cyl_r) consider(t);
      }
    }
  }
  return best;
}

struct TerrainEvent {
  double t = std::numeric_limits<double>::infinity();
  bool face = false;  // ray dives under a patch edge (absorbed, no return)
  bool valid = false;
};

/// First terrain interaction along the ray: either a point on a patch plane
/// or a dive below a patch at its boundary (a step face, which absorbs the
/// ray so every emitted ground point lies exactly on a declared patch).
inline TerrainEvent trace_terrain(const Point3& o, const Point3& d,
                                  const std::vector<TerrainPatch>& patches) {
  TerrainEvent best;
  for (const TerrainPatch& p : patches) {
    // Clip the ray's xy track against the patch rectangle.
    double t0 = 1e-9, t1 = std::numeric_limits<double>::infinity();
    bool ok = true;
    const double og[2] = {o.x, o.y};
    const double dg[2] = {d.x, d.y};
    const double lo[2] = {p.x0, p.y0};
    const double hi[2] = {p.x1, p.y1};
    for (int i = 0; i < 2 && ok; ++i) {
      if (std::abs(dg[i]) < 1e-15) {
        if (og[i] < lo[i] || og[i] > hi[i]) ok = false;
        continue;
      }
      double ta = (lo[i] - og[i]) / dg[i];
      double tb = (hi[i] - og[i]) / dg[i];
      if (ta > tb) std::swap(ta, tb);
      t0 = std::max(t0, ta);
      t1 = std::min(t1, tb);
      if (t0 > t1) ok = false;
    }
    if (!ok) continue;

    auto gap = [&](double t) {  // ray height minus plane height
      const double x = o.x + t * d.x, y = o.y + t * d.y;
      return (o.z + t * d.z) - p.z_at(x, y);
    };
    const double g0 = gap(t0);
    if (g0 < -1e-9) {
      // Entering the patch region below its plane: step face.
      if (t0 < best.t) best = {t0, true, true};
      continue;
    }
    // gap(t) is linear in t; a crossing exists iff it goes negative by t1.
    const double g1 = gap(std::min(t1, 1e9));
    if (g1 < -1e-12 && g1 != g0) {
      const double tc = t0 + (std::min(t1, 1e9) - t0) * (g0 / (g0 - g1));
      if (tc >= t0 && tc <= t1 && tc < best.t) best = {tc, false, true};
    } else if (g0 <= 1e-12 && g0 >= -1e-9) {
      // Grazing entry exactly on the plane.
      if (t0 < best.t) best = {t0, false, true};
    }
  }
  return best;
}

}  // namespace detail

/// Terrain height at (x, y), if any patch covers it.
inline std::optional<double> terrain_height(
    const std::vector<TerrainPatch>& patches, double x, double y) {
  for (const TerrainPatch& p : patches) {
    if (p.contains(x, y)) return p.z_at(x, y);
  }
  return std::nullopt;
}

/// Simulate the scene. Deterministic for a fixed seed (bit-reproducible).
inline SyntheticScene generate_scene(const SceneSpec& spec,
                                     std::uint64_t seed) {
  if (spec.ring_angles.empty()) {
    throw std::invalid_argument("scene: no ring angles declared");
  }
  // Reject overlapping object footprints.
  std::vector<detail::Solid> solids;
  std::vector<Box3D> footprints;
  for (const SceneObjectSpec& o : spec.objects) {
    const double gz = terrain_height(spec.terrain, o.cx, o.cy).value_or(0.0);
    solids.push_back(detail::build_solid(o, gz));
    footprints.push_back(detail::union_aabb(solids.back()));
  }
  for (std::size_t i = 0; i < footprints.size(); ++i) {
    for (std::size_t j = i + 1; j < footprints.size(); ++j) {
      const Box3D &a = footprints[i], &b = footprints[j];
      const bool apart = a.max.x <= b.min.x || b.max.x <= a.min.x ||
                         a.max.y <= b.min.y || b.max.y <= a.min.y;
      if (!apart) {
        throw std::invalid_argument("scene: overlapping object footprints");
      }
    }
  }

  SyntheticScene scene;
  scene.terrain = spec.terrain;
  for (std::size_t i = 0; i < spec.objects.size(); ++i) {
    GroundTruthObject gt;
    gt.cls = spec.objects[i].cls;
    gt.box = footprints[i];
    gt.box.min.z -= 3.0 * spec.noise_sigma;  // z jitter allowance
    gt.box.max.z += 3.0 * spec.noise_sigma;
    gt.center = gt.box.center();
    gt.source_type = to_string(gt.cls);
    gt.source_l = spec.objects[i].length;
    gt.source_w = spec.objects[i].width;
    gt.source_h = spec.objects[i].height;
    scene.objects.push_back(gt);
  }

  // Ring ids ascend with elevation, matching recover_rings.
  std::vector<std::size_t> ring_order(spec.ring_angles.size());
  std::iota(ring_order.begin(), ring_order.end(), std::size_t{0});
  std::stable_sort(ring_order.begin(), ring_order.end(),
                   [&](std::size_t a, std::size_t b) {
                     return spec.ring_angles[a] < spec.ring_angles[b];
                   });

  Rng rng(seed);
  const Point3 origin{0, 0, spec.sensor_height};
  const int n_az = std::max(
      1, static_cast<int>(std::floor((spec.azimuth_end - spec.azimuth_start) /
                                     spec.azimuth_step)));
  for (std::size_t ri = 0; ri < ring_order.size(); ++ri) {
    const double phi = spec.ring_angles[ring_order[ri]];
    const double cp = std::cos(phi), sp = std::sin(phi);
    for (int k = 0; k < n_az; ++k) {
      const double theta = spec.azimuth_start + k * spec.azimuth_step;
      const Point3 dir{cp * std::cos(theta), cp * std::sin(theta), sp};

      int hit_obj = -1;
      double t_obj = std::numeric_limits<double>::infinity();
      for (std::size_t s = 0; s < solids.size(); ++s) {
        if (auto t = detail::ray_solid(origin, dir, solids[s])) {
          if (*t < t_obj) {
            t_obj = *t;
            hit_obj = static_cast<int>(s);
          }
        }
      }
      const detail::TerrainEvent ev =
          detail::trace_terrain(origin, dir, spec.terrain);

      double t = std::numeric_limits<double>::infinity();
      int tag = -2;
      if (hit_obj >= 0 && (!ev.valid || t_obj < ev.t)) {
        t = t_obj;
        tag = hit_obj;
      } else if (ev.valid && !ev.face) {
        t = ev.t;
        tag = -1;
      }
      if (tag == -2) continue;

      Point3 p{origin.x + t * dir.x, origin.y + t * dir.y,
               origin.z + t * dir.z, 0.3f};
      if (p.x < spec.x_min || p.x > spec.x_max || p.y < spec.y_min ||
          p.y > spec.y_max) {
        continue;
      }
      p.z += rng.uniform(-spec.noise_sigma, spec.noise_sigma);
      scene.cloud.points.push_back(p);
      scene.cloud.ring.push_back(static_cast<int>(ri));
      scene.point_tag.push_back(tag);
    }
  }
  return scene;
}

/// Labeled point sets for classifier training: one sample per scene object
/// that received at least `min_points` returns.
struct LabeledSample {
  std::vector<Point3> points;
  int label = 0;  // ObjectClass value
};

inline std::vector<LabeledSample> extract_labeled_samples(
    const SyntheticScene& scene, std::size_t min_points = 5) {
  std::vector<LabeledSample> out;
  std::vector<std::vector<Point3>> per_object(scene.objects.size());
  for (std::size_t i = 0; i < scene.point_tag.size(); ++i) {
    const int tag = scene.point_tag[i];
    if (tag >= 0) per_object[static_cast<std::size_t>(tag)].push_back(scene.cloud.points[i]);
  }
  for (std::size_t i = 0; i < per_object.size(); ++i) {
    if (per_object[i].size() >= min_points) {
      out.push_back({std::move(per_object[i]),
                     static_cast<int>(scene.objects[i].cls)});
    }
  }
  return out;
}

/// Parse a plain-text scene description (one `key value...` per line, `#`
/// comments). Recognized keys: region, sensor_height, ring_band_deg,
/// ring_angles_deg, azimuth_deg, noise, seed, terrain, object.
inline SceneSpec parse_scene_spec(std::istream& in) {
  SceneSpec spec;
  spec.terrain.clear();
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    std::istringstream ls(line);
    std::string key;
    if (!(ls >> key)) continue;
    auto fail = [&](const std::string& what) {
      throw std::runtime_error("scene spec line " + std::to_string(line_no) +
                               ": " + what);
    };
    if (key == "region") {
      if (!(ls >> spec.x_min >> spec.x_max >> spec.y_min >> spec.y_max))
        fail("expected: region x_min x_max y_min y_max");
    } else if (key == "sensor_height") {
      if (!(ls >> spec.sensor_height)) fail("expected a number");
    } else if (key == "ring_band_deg") {
      double lo, hi;
      int n;
      if (!(ls >> lo >> hi >> n)) fail("expected: ring_band_deg lo hi count");
      spec.add_ring_band_deg(lo, hi, n);
    } else if (key == "ring_angles_deg") {
      double a;
      while (ls >> a) spec.ring_angles.push_back(a * M_PI / 180.0);
    } else if (key == "azimuth_deg") {
      double s, e, st;
      if (!(ls >> s >> e >> st)) fail("expected: azimuth_deg start end step");
      spec.azimuth_start = s * M_PI / 180.0;
      spec.azimuth_end = e * M_PI / 180.0;
      spec.azimuth_step = st * M_PI / 180.0;
    } else if (key == "noise") {
      if (!(ls >> spec.noise_sigma)) fail("expected a number");
    } else if (key == "seed") {
      if (!(ls >> spec.seed)) fail("expected an integer");
    } else if (key == "terrain") {
      TerrainPatch p;
      if (!(ls >> p.x0 >> p.x1 >> p.y0 >> p.y1 >> p.a >> p.b >> p.c))
        fail("expected: terrain x0 x1 y0 y1 a b c");
      spec.terrain.push_back(p);
    } else if (key == "object") {
      std::string kind;
      double cx, cy;
      if (!(ls >> kind >> cx >> cy)) fail("expected: object kind cx cy ...");
      if (kind == "car") {
        spec.objects.push_back(make_car(cx, cy));
      } else if (kind == "van") {
        spec.objects.push_back(make_van(cx, cy));
      } else if (kind == "pedestrian") {
        spec.objects.push_back(make_pedestrian(cx, cy));
      } else if (kind == "cyclist") {
        spec.objects.push_back(make_cyclist(cx, cy));
      } else if (kind == "clutter") {
        double l, w, h, clearance = 0.0;
        if (!(ls >> l >> w >> h)) fail("expected: object clutter cx cy l w h [clearance]");
        ls >> clearance;
        spec.objects.push_back(make_clutter(cx, cy, l, w, h, clearance));
      } else {
        fail("unknown object kind '" + kind + "'");
      }
    } else {
      fail("unknown key '" + key + "'");
    }
  }
  if (spec.terrain.empty()) {
    spec.terrain.push_back({spec.x_min, spec.x_max, spec.y_min, spec.y_max, 0, 0, 0});
  }
  return spec;
}

inline SceneSpec load_scene_spec(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("scene spec: cannot open " + path);
  return parse_scene_spec(in);
}

}  // namespace pointprop

#endif  // POINTPROP_SYNTHETIC_HPP
