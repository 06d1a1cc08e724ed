// SPDX-License-Identifier: Apache-2.0
// Copyright (C) 2026 the pointprop authors
//
// Segmentation parameter search: recall of ground-truth objects as the
// objective over [H_d, V_d, D_o], maximized with the particle swarm.

#ifndef POINTPROP_TUNE_HPP
#define POINTPROP_TUNE_HPP

#include "pointprop/eval.hpp"
#include "pointprop/pso.hpp"

namespace pointprop {

/// Pipeline parameters with the tuned triple substituted in.
inline PipelineParams with_segmentation_params(PipelineParams base,
                                               const std::vector<double>& x,
                                               bool include_filtering) {
  if (x.size() != 3) {
    throw std::invalid_argument("recall_objective: expected [H_d, V_d, D_o]");
  }
  base.cluster.h_d = std::max(x[0], 1e-6);
  base.cluster.v_d = std::max(x[1], 1e-6);
  base.ground_offset = std::max(x[2], 0.0);
  base.use_filtering = include_filtering;
  return base;
}

/// Recall of the pipeline at position x = [H_d, V_d, D_o] over the frames.
inline double recall_objective(const std::vector<double>& x,
                               const std::vector<EvalFrame>& frames,
                               const PipelineParams& base,
                               bool include_filtering = true) {
  const PipelineParams params =
      with_segmentation_params(base, x, include_filtering);
  return evaluate_recall(frames, params).recall;
}

/// PSO over the segmentation triple. cfg.range defaults to [0, 1.2]^3 when
/// left empty, matching the usual initialization domain.
inline PsoResult tune_segmentation(const std::vector<EvalFrame>& frames,
                                   const PipelineParams& base, PsoConfig cfg,
                                   bool include_filtering = true) {
  if (cfg.range.empty()) {
    cfg.range.assign(3, {0.0, 1.2});
  }
  return pso_optimize(
      [&](const std::vector<double>& x) {
        return recall_objective(x, frames, base, include_filtering);
      },
      cfg);
}

}  // namespace pointprop

#endif  // POINTPROP_TUNE_HPP
