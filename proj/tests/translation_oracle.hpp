#pragma once

// Brute-force translation estimate: minimizes the confidence-weighted squared pixel
// error over a dense grid inside the bounds, then refines with a shrinking
// coordinate pattern search.

#include "zedo/geometry.hpp"
#include "zedo/optimizer.hpp"

#include <limits>

namespace zedo::test {

inline double pixel_cost(const Pose3D& pose, const Vec3& t, const Pose2D& p2d, const CameraIntrinsics& cam) {
  double c = 0.0;
  for (int j = 0; j < pose.num_joints(); ++j) {
    const Vec3 p = pose.joint(j) + t;
    if (!(p.z() > 1e-9)) return std::numeric_limits<double>::infinity();
    const double w = p2d.confidence[j] * p2d.confidence[j];
    c += w * (project_point(p, cam) - p2d.pixels.row(j).transpose()).squaredNorm();
  }
  return c;
}

inline Vec3 grid_refine_translation(const Pose3D& pose, const Pose2D& p2d, const CameraIntrinsics& cam,
                                    const TranslationBounds& b, int cells = 40) {
  Vec3 best = b.lo;
  double best_cost = std::numeric_limits<double>::infinity();
  const Vec3 step = (b.hi - b.lo) / cells;
  for (int i = 0; i <= cells; ++i)
    for (int j = 0; j <= cells; ++j)
      for (int k = 0; k <= cells; ++k) {
        const Vec3 t = b.lo + Vec3(i * step.x(), j * step.y(), k * step.z());
        const double c = pixel_cost(pose, t, p2d, cam);
        if (c < best_cost) best_cost = c, best = t;
      }
  Vec3 h = step;
  while (h.maxCoeff() > 1e-10) {
    bool moved = false;
    for (int axis = 0; axis < 3; ++axis)
      for (double sign : {-1.0, 1.0}) {
        Vec3 t = best;
        t[axis] += sign * h[axis];
        t = b.clamp(t);
        const double c = pixel_cost(pose, t, p2d, cam);
        if (c < best_cost) best_cost = c, best = t, moved = true;
      }
    if (!moved) h *= 0.5;
  }
  return best;
}

}  // namespace zedo::test
