#pragma once

// Iterative pose optimization: initial rotation/translation search, the
// confidence-weighted translation solve, and the project-then-denoise loop.

#include "zedo/core.hpp"
#include "zedo/diffusion/reverse.hpp"
#include "zedo/diffusion/score_model.hpp"
#include "zedo/geometry.hpp"
#include "zedo/parallel.hpp"
#include "zedo/skeleton.hpp"

#include <Eigen/Eigenvalues>

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <numbers>
#include <optional>
#include <random>
#include <string>
#include <vector>

namespace zedo {

enum class TimeSampling { UniformPerIter, LinearDecay };

struct TranslationBounds {
  Vec3 lo{-10.0, -10.0, 1.0};
  Vec3 hi{10.0, 10.0, 15.0};

  Vec3 clamp(const Vec3& t) const { return t.cwiseMax(lo).cwiseMin(hi); }
  bool contains(const Vec3& t) const { return (t.array() >= lo.array()).all() && (t.array() <= hi.array()).all(); }
};

struct OptimizerConfig {
  int total_iters = 1000;
  int warmup_iters = 200;
  double t_max = 0.1;
  TimeSampling t_sampling = TimeSampling::UniformPerIter;
  TranslationBounds bounds;
  int rotation_grid = 72;
  /// Axis of the initial rotation search, camera frame. Camera y is the image
  /// vertical, which is the body's up axis for an upright camera.
  Vec3 rotation_axis = Vec3::UnitY();
  bool refine_angle = true;
  int denoise_steps = 2;
  ReverseOptions reverse;
  std::uint64_t seed = 0;

  void validate() const {
    if (total_iters < 1) throw ConfigError("total_iters must be >= 1");
    if (warmup_iters < 0 || warmup_iters >= total_iters) throw ConfigError("need 0 <= warmup_iters < total_iters");
    if (!(t_max > 0.0 && t_max <= 1.0)) throw ConfigError("t_max must lie in (0, 1]");
    if (!(bounds.lo.array() < bounds.hi.array()).all()) throw ConfigError("translation bounds need lo < hi");
    if (rotation_grid < 1) throw ConfigError("rotation_grid must be >= 1");
    if (!(rotation_axis.norm() > 0.0)) throw ConfigError("rotation_axis must be nonzero");
    if (denoise_steps < 0) throw ConfigError("denoise_steps must be >= 0");
  }
};

// ---------------------------------------------------------------------------
// Translation
// ---------------------------------------------------------------------------

/// Closed-form minimizer of sum_j w_j^2 |u_j x (P_j + T)|^2 with u_j = K^-1 (u, v, 1),
/// where w_j are the keypoint confidences. Not clamped.
inline Vec3 solve_translation_unclamped(const Pose3D& pose, const Pose2D& p2d, const CameraIntrinsics& cam) {
  const int n = pose.num_joints();
  if (p2d.num_joints() != n) throw JointCountMismatch("2D and 3D joint counts differ");
  Mat3 a = Mat3::Zero();
  Vec3 b = Vec3::Zero();
  int active = 0;
  for (int j = 0; j < n; ++j) {
    const double c = p2d.confidence[j];
    if (!(c > 0.0)) continue;
    ++active;
    const Vec3 u = cam.unproject(p2d.pixels(j, 0), p2d.pixels(j, 1));
    // [u]x^T [u]x = |u|^2 I - u u^T
    const Mat3 m = u.squaredNorm() * Mat3::Identity() - u * u.transpose();
    a += c * c * m;
    b -= c * c * m * pose.joint(j);
  }
  if (active < 2) throw InsufficientJoints(std::to_string(active) + " joints with positive confidence");
  Eigen::SelfAdjointEigenSolver<Mat3> eig(a);
  const Vec3 ev = eig.eigenvalues();
  if (!(ev.minCoeff() > 1e-12 * ev.maxCoeff()))
    throw SingularSystem("normal matrix is rank deficient (all rays parallel)");
  return eig.eigenvectors() * ((eig.eigenvectors().transpose() * b).array() / ev.array()).matrix();
}

inline Vec3 solve_translation(const Pose3D& pose, const Pose2D& p2d, const CameraIntrinsics& cam,
                              const TranslationBounds& bounds) {
  return bounds.clamp(solve_translation_unclamped(pose, p2d, cam));
}

struct ReprojectionStats {
  /// Confidence-weighted RMS pixel error over joints in front of the camera.
  double weighted_rms_px = 0.0;
  double max_px = 0.0;
  int behind = 0;
};

inline ReprojectionStats reprojection_stats(const Pose3D& pose, const Vec3& translation, const Pose2D& p2d,
                                            const CameraIntrinsics& cam) {
  ReprojectionStats s;
  double num = 0.0, den = 0.0;
  for (int j = 0; j < pose.num_joints(); ++j) {
    const Vec3 p = pose.joint(j) + translation;
    if (!(p.z() > 0.0)) {
      ++s.behind;
      continue;
    }
    const double e = (project_point(p, cam) - p2d.pixels.row(j).transpose()).norm();
    const double w = p2d.confidence[j] * p2d.confidence[j];
    num += w * e * e;
    den += w;
    s.max_px = std::max(s.max_px, e);
  }
  s.weighted_rms_px = den > 0.0 ? std::sqrt(num / den) : 0.0;
  return s;
}

// ---------------------------------------------------------------------------
// Initial pose optimizer
// ---------------------------------------------------------------------------

struct InitialAlignment {
  Pose3D pose;  // rotated anchor, pelvis-relative
  Vec3 translation = Vec3::Zero();
  double angle = 0.0;  // radians, wrapped to (-pi, pi]
  double error_px = 0.0;
  /// Objective at each grid angle 2 pi k / rotation_grid (infinity when invalid).
  std::vector<double> grid_errors;
};

namespace detail {

inline double wrap_angle(double a) {
  a = std::remainder(a, 2.0 * std::numbers::pi);
  return a <= -std::numbers::pi ? a + 2.0 * std::numbers::pi : a;
}

struct Candidate {
  Pose3D pose;
  Vec3 translation;
  double error = std::numeric_limits<double>::infinity();
};

inline Candidate evaluate_rotation(const Pose3D& anchor, const Pose2D& p2d, const CameraIntrinsics& cam,
                                   const OptimizerConfig& cfg, double angle) {
  Candidate c{rotate_about_axis(anchor, cfg.rotation_axis, angle), Vec3::Zero()};
  c.translation = solve_translation(c.pose, p2d, cam, cfg.bounds);
  const ReprojectionStats s = reprojection_stats(c.pose, c.translation, p2d, cam);
  if (2 * s.behind <= anchor.num_joints()) c.error = s.weighted_rms_px;
  return c;
}

}  // namespace detail

/// Grid search over rotations of the anchor about cfg.rotation_axis, translation
/// solved in closed form per candidate, then golden-section refinement of the best
/// angle within one grid cell.
inline InitialAlignment initial_pose_optimize(const Pose3D& anchor, const Pose2D& p2d, const CameraIntrinsics& cam,
                                              const OptimizerConfig& cfg) {
  cfg.validate();
  if (anchor.num_joints() != p2d.num_joints()) throw JointCountMismatch("anchor and 2D joint counts differ");

  const double cell = 2.0 * std::numbers::pi / cfg.rotation_grid;
  InitialAlignment out;
  out.grid_errors.resize(cfg.rotation_grid);
  std::optional<detail::Candidate> best;
  double best_angle = 0.0;
  for (int k = 0; k < cfg.rotation_grid; ++k) {
    const double a = k * cell;
    detail::Candidate c = detail::evaluate_rotation(anchor, p2d, cam, cfg, a);
    out.grid_errors[k] = c.error;
    if (std::isfinite(c.error) && (!best || c.error < best->error)) {
      best = std::move(c);
      best_angle = a;
    }
  }
  if (!best) throw AllCandidatesBehindCamera("every rotation candidate places most joints behind the camera");

  if (cfg.refine_angle && cfg.rotation_grid > 1) {
    constexpr double inv_phi = 0.6180339887498949;
    double lo = best_angle - cell, hi = best_angle + cell;
    auto f = [&](double a) { return detail::evaluate_rotation(anchor, p2d, cam, cfg, a).error; };
    double x1 = hi - inv_phi * (hi - lo), x2 = lo + inv_phi * (hi - lo);
    double f1 = f(x1), f2 = f(x2);
    while (hi - lo > 1e-9) {
      if (f1 < f2) {
        hi = x2, x2 = x1, f2 = f1;
        x1 = hi - inv_phi * (hi - lo);
        f1 = f(x1);
      } else {
        lo = x1, x1 = x2, f1 = f2;
        x2 = lo + inv_phi * (hi - lo);
        f2 = f(x2);
      }
    }
    const double a = 0.5 * (lo + hi);
    detail::Candidate refined = detail::evaluate_rotation(anchor, p2d, cam, cfg, a);
    if (refined.error < best->error) {
      best = std::move(refined);
      best_angle = a;
    }
  }

  out.pose = std::move(best->pose);
  out.translation = best->translation;
  out.angle = detail::wrap_angle(best_angle);
  out.error_px = best->error;
  return out;
}

// ---------------------------------------------------------------------------
// Main loop
// ---------------------------------------------------------------------------

struct Hypothesis {
  Pose3D initial_pose;  // pelvis-relative
  int id = 0;
};

struct OptimizationTrace {
  InitialAlignment initial;
  /// Largest pixel error of front-facing joints right after the ray projection.
  std::vector<double> projection_error_px;
  /// Weighted RMS pixel error of the denoised pose at the iteration's translation.
  std::vector<double> reprojection_error_px;
  std::vector<Vec3> translation;
  std::vector<double> denoise_time;
  /// Joints that fell behind the camera in the ray projection.
  std::vector<int> behind_camera;
  /// Largest |coordinate| of the pelvis row of each denoiser output.
  std::vector<double> denoised_pelvis_abs;
  Pose3D final_pose;
  Vec3 final_translation = Vec3::Zero();

  int iterations() const { return static_cast<int>(translation.size()); }
};

struct ZedoResult {
  Pose3D pose;      // camera frame, absolute
  Pose3D relative;  // pelvis-relative
  OptimizationTrace trace;
};

/// Raised when a run aborts; carries the trace recorded up to the failure.
class OptimizationFailure : public Error {
 public:
  OptimizationFailure(const Error& cause, OptimizationTrace trace)
      : Error(cause.category(), cause.what()), trace_(std::move(trace)) {}
  const OptimizationTrace& trace() const noexcept { return trace_; }

 private:
  OptimizationTrace trace_;
};

inline double denoise_time_at(const OptimizerConfig& cfg, int i, std::mt19937_64& rng) {
  if (cfg.t_sampling == TimeSampling::LinearDecay)
    return std::min(1.0, cfg.t_max * (1.0 - static_cast<double>(i) / cfg.total_iters) + 1e-5);
  std::uniform_real_distribution<double> unif(0.0, 1.0);
  return cfg.t_max * (1.0 - unif(rng));
}

template <typename Scalar>
ZedoResult run_zedo(const Hypothesis& anchor, const Pose2D& p2d, const CameraIntrinsics& cam,
                    const ScoreModel<Scalar>& model, const OptimizerConfig& cfg) {
  cfg.validate();
  cam.validate();
  p2d.validate();
  const int n = anchor.initial_pose.num_joints();
  if (p2d.num_joints() != n) throw JointCountMismatch("anchor and 2D joint counts differ");
  if (model.dims().joints != n)
    throw JointCountMismatch("model expects " + std::to_string(model.dims().joints) + " joints, anchor has " +
                             std::to_string(n));
  const int pelvis = model.dims().pelvis_index;

  OptimizationTrace trace;
  const int iters = cfg.total_iters;
  trace.projection_error_px.reserve(iters);
  trace.reprojection_error_px.reserve(iters);
  trace.translation.reserve(iters);
  trace.denoise_time.reserve(iters);
  trace.behind_camera.reserve(iters);
  trace.denoised_pelvis_abs.reserve(iters);

  std::mt19937_64 rng(cfg.seed);
  try {
    trace.initial = initial_pose_optimize(anchor.initial_pose, p2d, cam, cfg);
    const std::vector<Ray> rays = pixels_to_rays(p2d, cam);
    Pose3D pose = trace.initial.pose;
    Pose2D weights = p2d;
    Vec3 t_cur = trace.initial.translation;

    for (int i = 0; i < iters; ++i) {
      if (i >= cfg.warmup_iters) t_cur = solve_translation(pose, weights, cam, cfg.bounds);

      RayProjection proj = project_onto_rays(pose, t_cur, rays);
      pose = std::move(proj.pose);
      double worst = 0.0;
      for (int j = 0; j < n; ++j) {
        // Behind-camera joints sit out the next translation solve.
        weights.confidence[j] = proj.behind_camera[j] ? 0.0 : p2d.confidence[j];
        if (proj.behind_camera[j]) continue;
        const Vec2 px = project_point(pose.joint(j) + t_cur, cam);
        worst = std::max(worst, (px - p2d.pixels.row(j).transpose()).norm());
      }
      trace.projection_error_px.push_back(worst);
      trace.behind_camera.push_back(proj.behind_count());
      trace.translation.push_back(t_cur);

      const double t = denoise_time_at(cfg, i, rng);
      trace.denoise_time.push_back(t);
      const PelvisRelativePose rel = to_pelvis_relative(pose, pelvis);
      const Pose3D clean = denoise(model, rel.pose, t, cfg.denoise_steps, cfg.reverse, &rng);
      trace.denoised_pelvis_abs.push_back(clean.joints.row(pelvis).cwiseAbs().maxCoeff());
      pose = Pose3D(clean.joints.rowwise() + rel.pelvis_position.transpose(), Frame::PelvisRelative);

      trace.reprojection_error_px.push_back(reprojection_stats(pose, t_cur, p2d, cam).weighted_rms_px);
    }

    PelvisRelativePose rel = to_pelvis_relative(pose, pelvis);
    trace.final_translation = t_cur + rel.pelvis_position;
    trace.final_pose = from_pelvis_relative(rel.pose, trace.final_translation);
    ZedoResult result{trace.final_pose, std::move(rel.pose), {}};
    result.trace = std::move(trace);
    return result;
  } catch (const Error& e) {
    throw OptimizationFailure(e, std::move(trace));
  }
}

struct HypothesisOutcome {
  int id = 0;
  std::optional<ZedoResult> result;
  std::string error;
  std::optional<ErrorCategory> error_category;
  /// Partial trace when the run failed.
  OptimizationTrace failed_trace;

  bool ok() const { return result.has_value(); }
};

/// Runs every anchor independently with seed = cfg.seed + anchor id. Failures are
/// recorded per anchor. No hypothesis is preferred over another here.
template <typename Scalar>
std::vector<HypothesisOutcome> run_multi_hypothesis(const std::vector<Hypothesis>& anchors, const Pose2D& p2d,
                                                    const CameraIntrinsics& cam, const ScoreModel<Scalar>& model,
                                                    const OptimizerConfig& cfg, int threads = 1) {
  if (anchors.empty()) throw ConfigError("at least one hypothesis is required");
  std::vector<HypothesisOutcome> out(anchors.size());
  parallel_for(static_cast<int>(anchors.size()), threads, [&](int k) {
    OptimizerConfig local = cfg;
    local.seed = cfg.seed + static_cast<std::uint64_t>(anchors[k].id);
    HypothesisOutcome& o = out[k];
    o.id = anchors[k].id;
    try {
      o.result = run_zedo(anchors[k], p2d, cam, model, local);
    } catch (const OptimizationFailure& e) {
      o.error = e.what();
      o.error_category = e.category();
      o.failed_trace = e.trace();
    } catch (const Error& e) {
      o.error = e.what();
      o.error_category = e.category();
    }
  });
  return out;
}

}  // namespace zedo
