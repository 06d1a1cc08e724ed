// SPDX-License-Identifier: Apache-2.0
// Copyright (C) 2026 the pointprop authors
//
// End-to-end proposal pipeline for one frame: ground removal, clustering
// (scan-based or distance-based), proposal filtering, and optional
// classification, with per-stage wall-clock accounting.

#ifndef POINTPROP_PIPELINE_HPP
#define POINTPROP_PIPELINE_HPP

#include <chrono>

#include "pointprop/classify.hpp"
#include "pointprop/cluster.hpp"
#include "pointprop/filter.hpp"
#include "pointprop/ground.hpp"
#include "pointprop/ingest.hpp"

namespace pointprop {

enum class ClusterBackend { Scan, Distance, DistanceBrute };

struct PipelineParams {
  GroundGridConfig ground;
  double ground_offset = 0.26;  // D_o
  ClusterParams cluster;        // T_d 0.5, H_d 0.49, V_d 0.58
  FilterParams filter;
  ClusterBackend backend = ClusterBackend::Scan;
  bool use_filtering = true;
  double iou_threshold = 0.25;
  int threads = 1;
  int n_rings = 64;  // ring recovery when loading ring-less clouds
};

struct StageSeconds {
  double ground = 0, cluster = 0, filter = 0, classify = 0, total = 0;
};

struct FrameResult {
  std::vector<Proposal> proposals;
  std::vector<Prediction> predictions;  // aligned with proposals; empty if
                                        // classification was not run
  GroundRemovalReport ground_report;
  std::size_t raw_proposal_count = 0;
  StageSeconds seconds;
};

/// A point cloud with its annotations, the unit of evaluation.
struct EvalFrame {
  PointCloud cloud;
  std::vector<GroundTruthObject> ground_truth;
};

inline FrameResult process_frame(const PointCloud& cloud,
                                 const PipelineParams& params,
                                 ClassifierModel* model = nullptr,
                                 std::uint64_t sample_seed = 1) {
  using clock = std::chrono::steady_clock;
  auto seconds_since = [](clock::time_point start) {
    return std::chrono::duration<double>(clock::now() - start).count();
  };

  FrameResult result;
  const auto t_begin = clock::now();

  auto t0 = clock::now();
  const GroundGrid grid = postprocess_grid(
      build_ground_grid(cloud, params.ground, params.threads));
  auto [kept, report] = remove_ground(cloud, grid, params.ground_offset);
  result.ground_report = report;
  result.seconds.ground = seconds_since(t0);

  t0 = clock::now();
  std::vector<Cluster> clusters;
  switch (params.backend) {
    case ClusterBackend::Scan:
      clusters = cluster_scan(kept, params.cluster);
      break;
    case ClusterBackend::Distance:
      clusters = cluster_distance(kept, params.cluster.t_d);
      break;
    case ClusterBackend::DistanceBrute:
      clusters = cluster_distance_brute(kept, params.cluster.t_d);
      break;
  }
  std::vector<Proposal> proposals = make_proposals(kept, clusters);
  result.seconds.cluster = seconds_since(t0);
  result.raw_proposal_count = proposals.size();

  t0 = clock::now();
  if (params.use_filtering) {
    proposals = size_filter(proposals, params.filter);
    proposals = label_occlusion(std::move(proposals), params.filter.theta_t);
    if (params.filter.curve.a > 0) {
      proposals = min_points_filter(proposals, params.filter.curve);
    }
  } else {
    proposals = label_occlusion(std::move(proposals), params.filter.theta_t);
  }
  result.seconds.filter = seconds_since(t0);

  if (model) {
    t0 = clock::now();
    std::vector<std::vector<Point3>> sets;
    sets.reserve(proposals.size());
    for (const Proposal& p : proposals) {
      std::vector<Point3> pts;
      pts.reserve(p.cluster.indices.size());
      for (int idx : p.cluster.indices) {
        pts.push_back(kept.points[static_cast<std::size_t>(idx)]);
      }
      sets.push_back(std::move(pts));
    }
    if (!sets.empty()) {
      result.predictions = predict(*model, sets, sample_seed);
    }
    result.seconds.classify = seconds_since(t0);
  }

  result.proposals = std::move(proposals);
  result.seconds.total = seconds_since(t_begin);
  return result;
}

/// Fit the minimum-point-count curve the filter uses from the ground-truth
/// statistics of a frame set: (box-center x distance, points inside the box)
/// per annotated object of interest.
inline MinPointsCurve fit_curve_from_frames(const std::vector<EvalFrame>& frames,
                                            double interval = 0.5) {
  std::vector<std::pair<double, double>> samples;
  for (const EvalFrame& frame : frames) {
    for (const GroundTruthObject& gt : frame.ground_truth) {
      if (!is_object_of_interest(gt.cls)) continue;
      std::size_t inside = 0;
      for (const Point3& p : frame.cloud.points) {
        if (gt.box.contains(p)) ++inside;
      }
      if (inside > 0) {
        samples.emplace_back(gt.box.center().x, static_cast<double>(inside));
      }
    }
  }
  return fit_min_points_curve(samples, interval);
}

}  // namespace pointprop

#endif  // POINTPROP_PIPELINE_HPP
