// SPDX-License-Identifier: Apache-2.0
// Copyright (C) 2026 the pointprop authors
//
// Plain-text `key value` configuration for the pipeline. Every key can be
// overridden by a CLI flag; tuned parameters are written back so they flow
// into later runs without code edits.

#ifndef POINTPROP_CONFIG_HPP
#define POINTPROP_CONFIG_HPP

#include <map>

#include "pointprop/pipeline.hpp"

namespace pointprop {

struct KeyValueConfig {
  std::map<std::string, std::string> values;

  bool has(const std::string& key) const { return values.count(key) > 0; }

  double get_double(const std::string& key, double fallback) const {
    auto it = values.find(key);
    if (it == values.end()) return fallback;
    try {
      return std::stod(it->second);
    } catch (const std::exception&) {
      throw std::runtime_error("config: bad number for '" + key + "'");
    }
  }

  int get_int(const std::string& key, int fallback) const {
    return static_cast<int>(get_double(key, fallback));
  }

  bool get_bool(const std::string& key, bool fallback) const {
    auto it = values.find(key);
    if (it == values.end()) return fallback;
    if (it->second == "true" || it->second == "1") return true;
    if (it->second == "false" || it->second == "0") return false;
    throw std::runtime_error("config: bad bool for '" + key + "'");
  }

  std::string get_string(const std::string& key,
                         const std::string& fallback) const {
    auto it = values.find(key);
    return it == values.end() ? fallback : it->second;
  }

  void set(const std::string& key, const std::string& value) {
    values[key] = value;
  }
  void set(const std::string& key, double value) {
    std::ostringstream os;
    os.precision(17);
    os << value;
    values[key] = os.str();
  }
};

inline KeyValueConfig parse_config(std::istream& in) {
  KeyValueConfig cfg;
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    std::istringstream ls(line);
    std::string key, value;
    if (!(ls >> key)) continue;
    if (!(ls >> value)) {
      throw std::runtime_error("config: missing value at line " +
                               std::to_string(line_no));
    }
    cfg.values[key] = value;
  }
  return cfg;
}

inline KeyValueConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("config: cannot open " + path);
  return parse_config(in);
}

inline void save_config(const KeyValueConfig& cfg, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("config: cannot write " + path);
  for (const auto& [key, value] : cfg.values) out << key << ' ' << value << '\n';
}

inline void apply_pipeline_config(PipelineParams& p, const KeyValueConfig& c) {
  p.ground.origin_x = c.get_double("ground.origin_x", p.ground.origin_x);
  p.ground.origin_y = c.get_double("ground.origin_y", p.ground.origin_y);
  p.ground.length = c.get_double("ground.length", p.ground.length);
  p.ground.width = c.get_double("ground.width", p.ground.width);
  p.ground.cell_length = c.get_double("ground.cell_length", p.ground.cell_length);
  p.ground.cell_width = c.get_double("ground.cell_width", p.ground.cell_width);
  p.ground.bin_width = c.get_double("ground.bin_width", p.ground.bin_width);
  p.ground.ground_ratio = c.get_double("ground.ground_ratio", p.ground.ground_ratio);
  p.ground_offset = c.get_double("pipeline.ground_offset", p.ground_offset);
  p.cluster.t_d = c.get_double("cluster.t_d", p.cluster.t_d);
  p.cluster.h_d = c.get_double("cluster.h_d", p.cluster.h_d);
  p.cluster.v_d = c.get_double("cluster.v_d", p.cluster.v_d);
  p.cluster.mini_points = c.get_int("cluster.mini_points", p.cluster.mini_points);
  p.filter.max_length = c.get_double("filter.max_length", p.filter.max_length);
  p.filter.max_width = c.get_double("filter.max_width", p.filter.max_width);
  p.filter.min_height = c.get_double("filter.min_height", p.filter.min_height);
  p.filter.theta_t = c.get_double("filter.theta_t_deg",
                                  p.filter.theta_t * 180.0 / M_PI) *
                     M_PI / 180.0;
  p.filter.curve.a = c.get_double("filter.curve_a", p.filter.curve.a);
  p.filter.curve.k = c.get_double("filter.curve_k", p.filter.curve.k);
  p.use_filtering = c.get_bool("pipeline.use_filtering", p.use_filtering);
  p.iou_threshold = c.get_double("pipeline.iou_threshold", p.iou_threshold);
  p.threads = c.get_int("pipeline.threads", p.threads);
  p.n_rings = c.get_int("pipeline.n_rings", p.n_rings);
  const std::string backend = c.get_string(
      "pipeline.backend", p.backend == ClusterBackend::Scan        ? "scan"
                          : p.backend == ClusterBackend::Distance ? "distance"
                                                                  : "distance_brute");
  if (backend == "scan") {
    p.backend = ClusterBackend::Scan;
  } else if (backend == "distance") {
    p.backend = ClusterBackend::Distance;
  } else if (backend == "distance_brute") {
    p.backend = ClusterBackend::DistanceBrute;
  } else {
    throw std::runtime_error("config: unknown backend '" + backend + "'");
  }
}

inline KeyValueConfig pipeline_to_config(const PipelineParams& p) {
  KeyValueConfig c;
  c.set("ground.origin_x", p.ground.origin_x);
  c.set("ground.origin_y", p.ground.origin_y);
  c.set("ground.length", p.ground.length);
  c.set("ground.width", p.ground.width);
  c.set("ground.cell_length", p.ground.cell_length);
  c.set("ground.cell_width", p.ground.cell_width);
  c.set("ground.bin_width", p.ground.bin_width);
  c.set("ground.ground_ratio", p.ground.ground_ratio);
  c.set("pipeline.ground_offset", p.ground_offset);
  c.set("cluster.t_d", p.cluster.t_d);
  c.set("cluster.h_d", p.cluster.h_d);
  c.set("cluster.v_d", p.cluster.v_d);
  c.set("cluster.mini_points", static_cast<double>(p.cluster.mini_points));
  c.set("filter.max_length", p.filter.max_length);
  c.set("filter.max_width", p.filter.max_width);
  c.set("filter.min_height", p.filter.min_height);
  c.set("filter.theta_t_deg", p.filter.theta_t * 180.0 / M_PI);
  c.set("filter.curve_a", p.filter.curve.a);
  c.set("filter.curve_k", p.filter.curve.k);
  c.set("pipeline.use_filtering", p.use_filtering ? "true" : "false");
  c.set("pipeline.iou_threshold", p.iou_threshold);
  c.set("pipeline.threads", static_cast<double>(p.threads));
  c.set("pipeline.n_rings", static_cast<double>(p.n_rings));
  c.set("pipeline.backend",
        p.backend == ClusterBackend::Scan        ? "scan"
        : p.backend == ClusterBackend::Distance ? "distance"
                                                 : "distance_brute");
  return c;
}

}  // namespace pointprop

#endif  // POINTPROP_CONFIG_HPP
