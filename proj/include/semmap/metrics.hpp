// Top-down segmentation metrics under modal masking (accuracy, per-class
// recall / precision / IoU / boundary F1), scene-level bootstrap standard
// errors, and navigation metrics (success, SPL, soft SPL).
#ifndef SEMMAP_METRICS_HPP_
#define SEMMAP_METRICS_HPP_

#include <algorithm>
#include <array>
#include <cmath>
#include <map>
#include <string>
#include <vector>

#include "semmap/core.hpp"
#include "semmap/imgproc.hpp"
#include "semmap/map.hpp"
#include "semmap/rng.hpp"

namespace semmap {

struct EvalOptions {
  int bf1_tolerance = 3;             // cells, Chebyshev
  bool include_void_in_acc = true;
  bool penalize_hallucinated = true;  // predicted-only classes add precision 0 to the mean
};

struct ClassScores {
  bool in_gt = false;
  bool in_pred = false;
  long long tp = 0, fp = 0, fn = 0;
  double recall = 0, precision = 0, iou = 0, bf1 = 0;
};

struct SegReport {
  double acc = 0;
  double mean_recall = 0, mean_precision = 0, mean_iou = 0, mean_bf1 = 0;
  std::array<ClassScores, kNumClasses> per_class{};  // index 0 unused
  long long evaluated_cells = 0;
};

/// Class cells with a 4-neighbour (inside the raster and the mask) of another class.
inline BinaryRaster class_boundary(const LabelRaster& labels, const BinaryRaster& mask, ClassId c) {
  const int w = labels.width(), h = labels.height();
  BinaryRaster out(w, h, 0);
  for (int y = 0; y < h; ++y)
    for (int x = 0; x < w; ++x) {
      if (!mask(x, y) || labels(x, y) != c) continue;
      constexpr int dx[4] = {1, -1, 0, 0}, dy[4] = {0, 0, 1, -1};
      for (int k = 0; k < 4; ++k) {
        const int nx = x + dx[k], ny = y + dy[k];
        if (labels.contains(nx, ny) && mask(nx, ny) && labels(nx, ny) != c) {
          out(x, y) = 1;
          break;
        }
      }
    }
  return out;
}

struct BoundaryMatch {
  long long pred_total = 0, pred_matched = 0;
  long long gt_total = 0, gt_matched = 0;
};

inline double bf1_from_match(const BoundaryMatch& m) {
  if (m.pred_total == 0 && m.gt_total == 0) return 1.0;
  const double p = m.pred_total ? double(m.pred_matched) / m.pred_total : 0.0;
  const double r = m.gt_total ? double(m.gt_matched) / m.gt_total : 0.0;
  return p + r > 0 ? 2.0 * p * r / (p + r) : 0.0;
}

/// Boundary matching via square dilation: a boundary cell matches if the
/// other map has a boundary cell within Chebyshev distance theta.
inline BoundaryMatch match_boundaries(const BinaryRaster& pred_b, const BinaryRaster& gt_b, int theta) {
  BoundaryMatch m;
  const int side = 2 * theta + 1;
  const BinaryRaster gt_zone = dilate(gt_b, side);
  const BinaryRaster pred_zone = dilate(pred_b, side);
  for (std::size_t i = 0; i < pred_b.size(); ++i) {
    if (pred_b[i]) {
      ++m.pred_total;
      m.pred_matched += gt_zone[i];
    }
    if (gt_b[i]) {
      ++m.gt_total;
      m.gt_matched += pred_zone[i];
    }
  }
  return m;
}

inline SegReport eval_segmentation(const SemanticMap& pred, const SemanticMap& gt, const BinaryRaster& mask,
                                   const EvalOptions& opt = {}) {
  require_same_grid(pred.grid, gt.grid);
  if (!pred.labels.same_shape(gt.labels) || !mask.same_shape(gt.labels))
    throw Error(ErrorCode::GridMismatch, "prediction, ground truth and mask dimensions differ");
  SegReport rep;
  long long correct = 0, counted = 0;
  for (std::size_t i = 0; i < mask.size(); ++i) {
    if (!mask[i]) continue;
    const ClassId p = pred.labels[i], g = gt.labels[i];
    if (p >= kNumClasses || g >= kNumClasses) throw Error(ErrorCode::InvalidArgument, "label outside 0..12");
    if (opt.include_void_in_acc || g != 0) {
      ++counted;
      correct += (p == g);
    }
    if (g != 0) rep.per_class[g].in_gt = true;
    if (p != 0) rep.per_class[p].in_pred = true;
    if (p == g) {
      if (g != 0) ++rep.per_class[g].tp;
    } else {
      if (p != 0) ++rep.per_class[p].fp;
      if (g != 0) ++rep.per_class[g].fn;
    }
  }
  rep.evaluated_cells = counted;
  rep.acc = counted ? double(correct) / counted : 0.0;

  int n_gt = 0, n_prec = 0;
  double s_rec = 0, s_prec = 0, s_iou = 0, s_bf1 = 0;
  for (int c = 1; c < kNumClasses; ++c) {
    ClassScores& cs = rep.per_class[c];
    if (!cs.in_gt && !cs.in_pred) continue;
    cs.recall = cs.tp + cs.fn ? double(cs.tp) / (cs.tp + cs.fn) : 0.0;
    cs.precision = cs.tp + cs.fp ? double(cs.tp) / (cs.tp + cs.fp) : 0.0;
    cs.iou = cs.tp + cs.fp + cs.fn ? double(cs.tp) / (cs.tp + cs.fp + cs.fn) : 0.0;
    const auto cc = static_cast<ClassId>(c);
    cs.bf1 = bf1_from_match(match_boundaries(class_boundary(pred.labels, mask, cc),
                                             class_boundary(gt.labels, mask, cc), opt.bf1_tolerance));
    if (cs.in_gt) {
      ++n_gt;
      s_rec += cs.recall;
      s_iou += cs.iou;
      s_bf1 += cs.bf1;
      ++n_prec;
      s_prec += cs.precision;
    } else if (opt.penalize_hallucinated) {
      ++n_prec;
      s_prec += cs.precision;
    }
  }
  if (n_gt) {
    rep.mean_recall = s_rec / n_gt;
    rep.mean_iou = s_iou / n_gt;
    rep.mean_bf1 = s_bf1 / n_gt;
  }
  if (n_prec) rep.mean_precision = s_prec / n_prec;
  return rep;
}

// ---------------------------------------------------------------------------
// Bootstrap over scenes

/// Standard deviation of the mean over B resamples (with replacement) of the
/// per-scene values.
inline double bootstrap_se(const std::vector<double>& per_scene, int resamples, std::uint64_t seed) {
  if (per_scene.empty()) throw Error(ErrorCode::EmptyInput, "bootstrap needs at least one scene");
  if (resamples < 1) throw Error(ErrorCode::InvalidArgument, "bootstrap needs at least one resample");
  Rng rng(seed);
  const auto n = static_cast<long long>(per_scene.size());
  double sum = 0, sum_sq = 0;
  for (int b = 0; b < resamples; ++b) {
    double m = 0;
    for (long long k = 0; k < n; ++k) m += per_scene[static_cast<std::size_t>(rng.uniform_int(0, n - 1))];
    m /= static_cast<double>(n);
    sum += m;
    sum_sq += m * m;
  }
  const double mean = sum / resamples;
  return std::sqrt(std::max(0.0, sum_sq / resamples - mean * mean));
}

struct MetricSummary {
  std::string name;
  double mean = 0;
  double se = 0;
};

/// Scene-mean of each headline metric with its bootstrap SE.
inline std::vector<MetricSummary> summarize(const std::vector<SegReport>& reports, int resamples = 1000,
                                            std::uint64_t seed = 1) {
  if (reports.empty()) throw Error(ErrorCode::EmptyInput, "no reports to summarize");
  const std::pair<const char*, double SegReport::*> fields[] = {
      {"acc", &SegReport::acc},           {"mrecall", &SegReport::mean_recall},
      {"mprecision", &SegReport::mean_precision}, {"miou", &SegReport::mean_iou},
      {"mbf1", &SegReport::mean_bf1}};
  std::vector<MetricSummary> out;
  for (const auto& [name, field] : fields) {
    std::vector<double> values;
    for (const SegReport& r : reports) values.push_back(r.*field);
    double mean = 0;
    for (double v : values) mean += v;
    mean /= static_cast<double>(values.size());
    out.push_back({name, mean, bootstrap_se(values, resamples, seed)});
  }
  return out;
}

// ---------------------------------------------------------------------------
// Navigation

struct EpisodeResult {
  int id = 0;
  bool success = false;
  double path_length = 0;     // p
  double oracle_length = 0;   // l
  double initial_distance = 0;  // d0
  double final_distance = 0;    // d
  std::vector<std::array<double, 3>> path;  // (x, z, yaw)
};

inline double episode_spl(const EpisodeResult& e) {
  if (!e.success) return 0.0;
  if (e.oracle_length <= 0.0) return 1.0;
  return e.oracle_length / std::max(e.path_length, e.oracle_length);
}

inline double episode_soft_spl(const EpisodeResult& e) {
  double progress;
  if (e.initial_distance <= 0.0 || !std::isfinite(e.initial_distance)) {
    progress = e.success ? 1.0 : 0.0;
  } else {
    progress = 1.0 - e.final_distance / e.initial_distance;
  }
  progress = std::clamp(progress, 0.0, 1.0);
  if (e.oracle_length <= 0.0 || !std::isfinite(e.oracle_length)) return progress;
  return std::clamp(progress * e.oracle_length / std::max(e.path_length, e.oracle_length), 0.0, 1.0);
}

struct NavSummary {
  double success_rate = 0;
  double spl = 0;
  double soft_spl = 0;
  double mean_dist_to_goal = 0;
};

inline NavSummary eval_navigation(const std::vector<EpisodeResult>& episodes) {
  NavSummary s;
  if (episodes.empty()) return s;
  int finite = 0;
  for (const EpisodeResult& e : episodes) {
    s.success_rate += e.success;
    s.spl += episode_spl(e);
    s.soft_spl += episode_soft_spl(e);
    if (std::isfinite(e.final_distance)) {
      s.mean_dist_to_goal += e.final_distance;
      ++finite;
    }
  }
  const double n = static_cast<double>(episodes.size());
  s.success_rate /= n;
  s.spl /= n;
  s.soft_spl /= n;
  s.mean_dist_to_goal = finite ? s.mean_dist_to_goal / finite : std::numeric_limits<double>::infinity();
  return s;
}

}  // namespace semmap

#endif  // SEMMAP_METRICS_HPP_
