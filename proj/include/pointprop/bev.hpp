// SPDX-License-Identifier: Apache-2.0
// Copyright (C) 2026 the pointprop authors
//
// Bird's-eye-view raster: top-down orthographic projection of a cloud with
// box outlines, written as binary PPM.

#ifndef POINTPROP_BEV_HPP
#define POINTPROP_BEV_HPP

#include <fstream>

#include "pointprop/core.hpp"
#include "pointprop/ingest.hpp"

namespace pointprop {

struct BevBox {
  Box3D box;
  int class_id = -1;  // -1 = unclassified proposal
};

struct BevOptions {
  double x_min = 0, x_max = 70, y_min = -40, y_max = 40;
  double resolution = 0.1;  // meters per pixel
};

inline void render_bev(const PointCloud& cloud, const std::vector<BevBox>& boxes,
                       const BevOptions& opt, const std::string& path) {
  const int cols = std::max(1, static_cast<int>((opt.x_max - opt.x_min) / opt.resolution));
  const int rows = std::max(1, static_cast<int>((opt.y_max - opt.y_min) / opt.resolution));
  std::vector<unsigned char> img(static_cast<std::size_t>(rows) * cols * 3, 0);

  // x right, y up (row 0 at y_max).
  auto pixel = [&](double x, double y, int& px, int& py) {
    px = static_cast<int>((x - opt.x_min) / opt.resolution);
    py = rows - 1 - static_cast<int>((y - opt.y_min) / opt.resolution);
    return px >= 0 && px < cols && py >= 0 && py < rows;
  };
  auto put = [&](int px, int py, unsigned char r, unsigned char g, unsigned char b) {
    if (px < 0 || px >= cols || py < 0 || py >= rows) return;
    const std::size_t at = (static_cast<std::size_t>(py) * cols + px) * 3;
    img[at] = r;
    img[at + 1] = g;
    img[at + 2] = b;
  };

  for (const Point3& p : cloud.points) {
    int px, py;
    if (!pixel(p.x, p.y, px, py)) continue;
    const std::size_t at = (static_cast<std::size_t>(py) * cols + px) * 3;
    for (int ch = 0; ch < 3; ++ch) {
      img[at + static_cast<std::size_t>(ch)] = static_cast<unsigned char>(
          std::min(255, img[at + static_cast<std::size_t>(ch)] + 70));
    }
  }

  auto class_color = [](int id, unsigned char& r, unsigned char& g, unsigned char& b) {
    switch (id) {
      case static_cast<int>(ObjectClass::Car): r = 255; g = 40; b = 40; break;
      case static_cast<int>(ObjectClass::Pedestrian): r = 60; g = 120; b = 255; break;
      case static_cast<int>(ObjectClass::Van): r = 255; g = 60; b = 255; break;
      case static_cast<int>(ObjectClass::Cyclist): r = 255; g = 220; b = 40; break;
      case static_cast<int>(ObjectClass::Background): r = 130; g = 130; b = 130; break;
      default: r = 255; g = 255; b = 255; break;
    }
  };

  for (const BevBox& bb : boxes) {
    unsigned char r, g, b;
    class_color(bb.class_id, r, g, b);
    int x0, y0, x1, y1;
    pixel(bb.box.min.x, bb.box.min.y, x0, y0);
    pixel(bb.box.max.x, bb.box.max.y, x1, y1);
    if (x0 > x1) std::swap(x0, x1);
    if (y0 > y1) std::swap(y0, y1);
    for (int px = x0; px <= x1; ++px) {
      put(px, y0, r, g, b);
      put(px, y1, r, g, b);
    }
    for (int py = y0; py <= y1; ++py) {
      put(x0, py, r, g, b);
      put(x1, py, r, g, b);
    }
  }

  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("bev: cannot write " + path);
  out << "P6\n" << cols << ' ' << rows << "\n255\n";
  out.write(reinterpret_cast<const char*>(img.data()),
            static_cast<std::streamsize>(img.size()));
}

}  // namespace pointprop

#endif  // POINTPROP_BEV_HPP
