#pragma once

// Pose error metrics and evaluation reports. Distances are returned in millimeters;
// poses are stored in meters.

#include "zedo/core.hpp"
#include "zedo/geometry.hpp"

#include <algorithm>
#include <cstdio>
#include <limits>
#include <span>
#include <string>
#include <vector>

namespace zedo {

enum class RootAlignment { PelvisAligned, Absolute };

struct MetricOptions {
  int pelvis_index = 0;
  RootAlignment root = RootAlignment::PelvisAligned;
  AlignMode procrustes = AlignMode::Similarity;
  double pck_threshold_mm = 150.0;
  /// AUC thresholds; empty means 0, 5, ..., 150 mm.
  std::vector<double> auc_grid_mm;

  std::vector<double> resolved_auc_grid() const {
    if (!auc_grid_mm.empty()) return auc_grid_mm;
    std::vector<double> g;
    for (int k = 0; k <= 30; ++k) g.push_back(5.0 * k);
    return g;
  }
};

/// Per-joint Euclidean errors in millimeters, after the configured root alignment.
inline std::vector<double> joint_errors_mm(const Pose3D& pred, const Pose3D& gt, const MetricOptions& opt = {}) {
  require_same_joints(pred, gt);
  Joints3 p = pred.joints;
  if (opt.root == RootAlignment::PelvisAligned) {
    if (opt.pelvis_index < 0 || opt.pelvis_index >= gt.num_joints()) throw ConfigError("pelvis_index out of range");
    p.rowwise() += gt.joints.row(opt.pelvis_index) - pred.joints.row(opt.pelvis_index);
  }
  std::vector<double> e(pred.num_joints());
  for (int j = 0; j < pred.num_joints(); ++j) e[j] = 1000.0 * (p.row(j) - gt.joints.row(j)).norm();
  return e;
}

inline double mean_of(std::span<const double> v) {
  double s = 0.0;
  for (double x : v) s += x;
  return v.empty() ? 0.0 : s / static_cast<double>(v.size());
}

inline double mpjpe(const Pose3D& pred, const Pose3D& gt, const MetricOptions& opt = {}) {
  return mean_of(joint_errors_mm(pred, gt, opt));
}

inline double pa_mpjpe(const Pose3D& pred, const Pose3D& gt, const MetricOptions& opt = {}) {
  const ProcrustesResult r = procrustes_align(pred, gt, opt.procrustes);
  MetricOptions abs = opt;
  abs.root = RootAlignment::Absolute;
  return mpjpe(r.aligned, gt, abs);
}

inline double min_mpjpe(std::span<const Pose3D> preds, const Pose3D& gt, const MetricOptions& opt = {}) {
  if (preds.empty()) throw ConfigError("min_mpjpe needs at least one hypothesis");
  double best = std::numeric_limits<double>::infinity();
  for (const Pose3D& p : preds) best = std::min(best, mpjpe(p, gt, opt));
  return best;
}

struct PckAuc {
  double pck = 0.0;
  double auc = 0.0;
};

/// A joint counts as correct when its error is at most the threshold.
inline PckAuc pck_auc(const Pose3D& pred, const Pose3D& gt, const MetricOptions& opt = {}) {
  const std::vector<double> e = joint_errors_mm(pred, gt, opt);
  auto frac = [&e](double thr) {
    return static_cast<double>(std::count_if(e.begin(), e.end(), [thr](double x) { return x <= thr; })) /
           static_cast<double>(e.size());
  };
  PckAuc r;
  r.pck = frac(opt.pck_threshold_mm);
  const std::vector<double> grid = opt.resolved_auc_grid();
  for (double thr : grid) r.auc += frac(thr);
  r.auc /= static_cast<double>(grid.size());
  return r;
}

// ---------------------------------------------------------------------------
// Reports
// ---------------------------------------------------------------------------

struct SampleMetrics {
  int index = 0;
  int hypotheses = 1;
  /// Index of the hypothesis with the lowest MPJPE.
  int best_hypothesis = 0;
  double mpjpe_mm = 0.0;  // min over hypotheses
  double pa_mpjpe_mm = 0.0;  // min over hypotheses
  double pck = 0.0;  // of the best hypothesis
  double auc = 0.0;  // of the best hypothesis
};

struct EvalReport {
  std::vector<SampleMetrics> samples;
  double mean_mpjpe_mm = 0.0;
  double mean_pa_mpjpe_mm = 0.0;
  double mean_pck = 0.0;
  double mean_auc = 0.0;
  int hypotheses = 1;
  int joints = 0;
  std::string dataset;
  std::uint64_t seed = 0;
};

inline SampleMetrics evaluate_sample(std::span<const Pose3D> hyps, const Pose3D& gt, const MetricOptions& opt = {}) {
  if (hyps.empty()) throw ConfigError("sample has no hypotheses");
  SampleMetrics m;
  m.hypotheses = static_cast<int>(hyps.size());
  m.mpjpe_mm = std::numeric_limits<double>::infinity();
  m.pa_mpjpe_mm = std::numeric_limits<double>::infinity();
  for (int h = 0; h < m.hypotheses; ++h) {
    const double e = mpjpe(hyps[h], gt, opt);
    if (e < m.mpjpe_mm) {
      m.mpjpe_mm = e;
      m.best_hypothesis = h;
    }
    m.pa_mpjpe_mm = std::min(m.pa_mpjpe_mm, pa_mpjpe(hyps[h], gt, opt));
  }
  const PckAuc pa = pck_auc(hyps[m.best_hypothesis], gt, opt);
  m.pck = pa.pck;
  m.auc = pa.auc;
  return m;
}

/// `hyps[i]` lists the hypotheses for ground-truth sample i.
inline EvalReport evaluate(const std::vector<std::vector<Pose3D>>& hyps, const std::vector<Pose3D>& gt,
                           const MetricOptions& opt = {}) {
  if (hyps.size() != gt.size()) throw JointCountMismatch("prediction and ground-truth sample counts differ");
  EvalReport r;
  r.joints = gt.empty() ? 0 : gt.front().num_joints();
  r.hypotheses = hyps.empty() ? 0 : static_cast<int>(hyps.front().size());
  for (std::size_t i = 0; i < gt.size(); ++i) {
    SampleMetrics m = evaluate_sample(hyps[i], gt[i], opt);
    m.index = static_cast<int>(i);
    r.samples.push_back(m);
  }
  // Aggregate in index order so results do not depend on evaluation order.
  const double n = static_cast<double>(std::max<std::size_t>(1, r.samples.size()));
  for (const SampleMetrics& m : r.samples) {
    r.mean_mpjpe_mm += m.mpjpe_mm / n;
    r.mean_pa_mpjpe_mm += m.pa_mpjpe_mm / n;
    r.mean_pck += m.pck / n;
    r.mean_auc += m.auc / n;
  }
  return r;
}

/// Fixed-width summary table.
inline std::string format_table(const EvalReport& r) {
  char line[256];
  std::string out;
  std::snprintf(line, sizeof line, "%-14s | %4s | %3s | %9s | %12s | %6s | %6s\n", "Dataset", "S", "J", "MPJPE", "PA-MPJPE",
                "PCK", "AUC");
  out += line;
  out += std::string(72, '-') + "\n";
  std::snprintf(line, sizeof line, "%-14s | %4d | %3d | %9.1f | %12.1f | %6.1f | %6.1f\n",
                r.dataset.empty() ? "-" : r.dataset.c_str(), r.hypotheses, r.joints, r.mean_mpjpe_mm,
                r.mean_pa_mpjpe_mm, 100.0 * r.mean_pck, 100.0 * r.mean_auc);
  out += line;
  return out;
}

}  // namespace zedo
