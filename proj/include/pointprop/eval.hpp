// SPDX-License-Identifier: Apache-2.0
// Copyright (C) 2026 the pointprop authors
//
// Metrics and timing: axis-aligned 3D IoU, greedy proposal/ground-truth
// matching, recall over frame sets, one-vs-rest ROC / PRC / mAP for the
// classifier, and a per-stage wall-clock benchmark.

#ifndef POINTPROP_EVAL_HPP
#define POINTPROP_EVAL_HPP

#include "pointprop/pipeline.hpp"

namespace pointprop {

/// Intersection volume over union volume; 0 when the union is degenerate.
inline double iou_3d(const Box3D& a, const Box3D& b) {
  const double ix = std::max(0.0, std::min(a.max.x, b.max.x) - std::max(a.min.x, b.min.x));
  const double iy = std::max(0.0, std::min(a.max.y, b.max.y) - std::max(a.min.y, b.min.y));
  const double iz = std::max(0.0, std::min(a.max.z, b.max.z) - std::max(a.min.z, b.min.z));
  const double inter = ix * iy * iz;
  const double uni = a.volume() + b.volume() - inter;
  if (uni <= 0) return 0.0;
  return inter / uni;
}

struct MatchResult {
  int tp = 0;
  int fn = 0;
  std::vector<int> gt_to_proposal;  // -1 when unmatched
};

/// One-to-one greedy matching by descending IoU: a ground-truth object is a
/// true positive iff it gets a proposal with IoU >= threshold, and no
/// proposal is assigned twice.
inline MatchResult match_greedy(const std::vector<Box3D>& gt,
                                const std::vector<Box3D>& proposals,
                                double iou_threshold) {
  struct Pair {
    double iou;
    std::size_t g, p;
  };
  std::vector<Pair> pairs;
  for (std::size_t g = 0; g < gt.size(); ++g) {
    for (std::size_t p = 0; p < proposals.size(); ++p) {
      const double iou = iou_3d(gt[g], proposals[p]);
      if (iou >= iou_threshold) pairs.push_back({iou, g, p});
    }
  }
  std::stable_sort(pairs.begin(), pairs.end(),
                   [](const Pair& a, const Pair& b) { return a.iou > b.iou; });
  MatchResult result;
  result.gt_to_proposal.assign(gt.size(), -1);
  std::vector<bool> proposal_used(proposals.size(), false);
  for (const Pair& pr : pairs) {
    if (result.gt_to_proposal[pr.g] != -1 || proposal_used[pr.p]) continue;
    result.gt_to_proposal[pr.g] = static_cast<int>(pr.p);
    proposal_used[pr.p] = true;
    ++result.tp;
  }
  result.fn = static_cast<int>(gt.size()) - result.tp;
  return result;
}

struct FrameRecall {
  int tp = 0, fn = 0;
  std::size_t proposal_count = 0;
};

struct RecallReport {
  int tp = 0, fn = 0;
  double recall = 0;
  double mean_proposals = 0;
  std::vector<FrameRecall> frames;
};

/// Run the configured pipeline variant over every frame and aggregate
/// TP/FN against the objects of interest.
inline RecallReport evaluate_recall(const std::vector<EvalFrame>& frames,
                                    const PipelineParams& params) {
  RecallReport report;
  std::size_t gt_total = 0;
  std::size_t proposal_total = 0;
  for (const EvalFrame& frame : frames) {
    std::vector<Box3D> gt_boxes;
    for (const GroundTruthObject& gt : frame.ground_truth) {
      if (is_object_of_interest(gt.cls)) gt_boxes.push_back(gt.box);
    }
    gt_total += gt_boxes.size();
    FrameResult fr = process_frame(frame.cloud, params);
    std::vector<Box3D> boxes;
    boxes.reserve(fr.proposals.size());
    for (const Proposal& p : fr.proposals) boxes.push_back(p.box);
    const MatchResult m = match_greedy(gt_boxes, boxes, params.iou_threshold);
    report.tp += m.tp;
    report.fn += m.fn;
    proposal_total += boxes.size();
    report.frames.push_back({m.tp, m.fn, boxes.size()});
  }
  if (gt_total == 0) {
    throw std::invalid_argument("evaluate_recall: no ground-truth objects");
  }
  report.recall = static_cast<double>(report.tp) / (report.tp + report.fn);
  report.mean_proposals =
      static_cast<double>(proposal_total) / static_cast<double>(frames.size());
  return report;
}

inline void export_recall_csv(const RecallReport& report,
                              const std::string& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("recall csv: cannot write " + path);
  out << "frame,tp,fn,proposals\n";
  for (std::size_t i = 0; i < report.frames.size(); ++i) {
    const FrameRecall& fr = report.frames[i];
    out << i << ',' << fr.tp << ',' << fr.fn << ',' << fr.proposal_count << '\n';
  }
  out << "total," << report.tp << ',' << report.fn << ','
      << report.mean_proposals << '\n';
  out << "recall," << report.recall << ",,\n";
}

// ---------------------------------------------------------------------------
// Classification metrics.
// ---------------------------------------------------------------------------

struct CurvePoint {
  double x = 0, y = 0;  // ROC: (fpr, tpr); PRC: (recall, precision)
};

struct ClassMetrics {
  bool valid = false;  // false when the class never occurs in the labels
  std::vector<CurvePoint> roc;
  std::vector<CurvePoint> prc;
  double average_precision = 0;
  double roc_auc = 0;
};

struct ClassificationReport {
  double accuracy = 0;
  std::vector<ClassMetrics> per_class;
  double mean_average_precision = 0;  // object classes with labels only
  std::vector<int> excluded_classes;
};

/// One-vs-rest metrics from per-sample class probabilities. AP integrates
/// the precision-recall points (recall-sorted, anchored at recall 0) by the
/// trapezoid rule; mAP averages the four object classes, skipping any class
/// absent from the labels.
inline ClassificationReport classification_metrics(
    const std::vector<std::vector<double>>& probs,
    const std::vector<int>& labels, int n_classes = 5) {
  if (probs.size() != labels.size() || probs.empty()) {
    throw std::invalid_argument("metrics: probs/labels mismatch");
  }
  ClassificationReport report;
  std::size_t correct = 0;
  for (std::size_t i = 0; i < probs.size(); ++i) {
    int best = 0;
    for (int c = 1; c < n_classes; ++c) {
      if (probs[i][static_cast<std::size_t>(c)] > probs[i][static_cast<std::size_t>(best)]) best = c;
    }
    if (best == labels[i]) ++correct;
  }
  report.accuracy = static_cast<double>(correct) / static_cast<double>(probs.size());

  report.per_class.resize(static_cast<std::size_t>(n_classes));
  for (int c = 0; c < n_classes; ++c) {
    ClassMetrics& m = report.per_class[static_cast<std::size_t>(c)];
    std::vector<std::pair<double, bool>> scored;  // (score, is_positive)
    std::size_t positives = 0;
    for (std::size_t i = 0; i < probs.size(); ++i) {
      const bool pos = labels[i] == c;
      positives += pos ? 1 : 0;
      scored.emplace_back(probs[i][static_cast<std::size_t>(c)], pos);
    }
    if (positives == 0 || positives == probs.size()) {
      // One-vs-rest undefined without both label values.
      continue;
    }
    const std::size_t negatives = probs.size() - positives;
    std::stable_sort(scored.begin(), scored.end(),
                     [](const auto& a, const auto& b) { return a.first > b.first; });

    std::size_t tp = 0, fp = 0;
    m.roc.push_back({0, 0});
    for (std::size_t i = 0; i < scored.size();) {
      // Consume all samples tied at this score before emitting a point.
      const double score = scored[i].first;
      for (; i < scored.size() && scored[i].first == score; ++i) {
        if (scored[i].second) {
          ++tp;
        } else {
          ++fp;
        }
      }
      const double tpr = static_cast<double>(tp) / static_cast<double>(positives);
      const double fpr = static_cast<double>(fp) / static_cast<double>(negatives);
      const double precision = static_cast<double>(tp) / static_cast<double>(tp + fp);
      m.roc.push_back({fpr, tpr});
      m.prc.push_back({tpr, precision});  // recall == tpr
    }
    // Trapezoids over the recall-sorted PRC, anchored at recall 0.
    double ap = 0;
    double prev_r = 0, prev_p = m.prc.front().y;
    for (const CurvePoint& pt : m.prc) {
      ap += (pt.x - prev_r) * (pt.y + prev_p) / 2;
      prev_r = pt.x;
      prev_p = pt.y;
    }
    m.average_precision = ap;
    double auc = 0;
    for (std::size_t i = 1; i < m.roc.size(); ++i) {
      auc += (m.roc[i].x - m.roc[i - 1].x) * (m.roc[i].y + m.roc[i - 1].y) / 2;
    }
    m.roc_auc = auc;
    m.valid = true;
  }

  double ap_sum = 0;
  int ap_count = 0;
  for (int c = 1; c < n_classes; ++c) {  // object classes only
    const ClassMetrics& m = report.per_class[static_cast<std::size_t>(c)];
    if (m.valid) {
      ap_sum += m.average_precision;
      ++ap_count;
    } else {
      report.excluded_classes.push_back(c);
    }
  }
  report.mean_average_precision = ap_count > 0 ? ap_sum / ap_count : 0.0;
  return report;
}

inline void export_curves_csv(const ClassificationReport& report,
                              const std::string& roc_path,
                              const std::string& prc_path) {
  std::ofstream roc(roc_path), prc(prc_path);
  if (!roc || !prc) throw std::runtime_error("curves csv: cannot write");
  roc << "class,fpr,tpr\n";
  prc << "class,recall,precision\n";
  for (std::size_t c = 0; c < report.per_class.size(); ++c) {
    const ClassMetrics& m = report.per_class[c];
    if (!m.valid) continue;
    for (const CurvePoint& p : m.roc) roc << c << ',' << p.x << ',' << p.y << '\n';
    for (const CurvePoint& p : m.prc) prc << c << ',' << p.x << ',' << p.y << '\n';
  }
}

// ---------------------------------------------------------------------------
// Timing harness.
// ---------------------------------------------------------------------------

struct TimingReport {
  StageSeconds mean;            // per measured frame
  std::size_t frames_measured = 0;
  int threads = 1;
};

/// Mean per-stage wall-clock over the frames after `warmup` discarded
/// warm-up frames (monotonic clock, frames processed serially).
inline TimingReport benchmark(const std::vector<EvalFrame>& frames,
                              const PipelineParams& params,
                              ClassifierModel* model = nullptr,
                              std::size_t warmup = 3) {
  TimingReport report;
  report.threads = params.threads;
  if (frames.size() <= warmup) {
    throw std::invalid_argument("benchmark: no frames left after warm-up");
  }
  for (std::size_t i = 0; i < frames.size(); ++i) {
    const FrameResult fr = process_frame(frames[i].cloud, params, model);
    if (i < warmup) continue;
    report.mean.ground += fr.seconds.ground;
    report.mean.cluster += fr.seconds.cluster;
    report.mean.filter += fr.seconds.filter;
    report.mean.classify += fr.seconds.classify;
    report.mean.total += fr.seconds.total;
    ++report.frames_measured;
  }
  const double n = static_cast<double>(report.frames_measured);
  report.mean.ground /= n;
  report.mean.cluster /= n;
  report.mean.filter /= n;
  report.mean.classify /= n;
  report.mean.total /= n;
  return report;
}

/// CSV with one row of stage means. `cluster_incl_ground` mirrors the
/// paper-style accounting where ground removal folds into clustering.
inline void export_timing_csv(const TimingReport& report,
                              const std::string& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("timing csv: cannot write " + path);
  out << "frames,threads,ground_s,cluster_s,cluster_incl_ground_s,filter_s,"
         "classify_s,total_s\n";
  out << report.frames_measured << ',' << report.threads << ','
      << report.mean.ground << ',' << report.mean.cluster << ','
      << (report.mean.ground + report.mean.cluster) << ','
      << report.mean.filter << ',' << report.mean.classify << ','
      << report.mean.total << '\n';
}

}  // namespace pointprop

#endif  // POINTPROP_EVAL_HPP
