#pragma once

// Camera projection, pixel rays, ray projection, rotations and Procrustes alignment.

#include "zedo/core.hpp"

#include <Eigen/Geometry>
#include <Eigen/SVD>

#include <cmath>
#include <vector>

namespace zedo {

/// Unit direction of the camera ray through one pixel; origin is the camera center.
struct Ray {
  Vec3 direction = Vec3::UnitZ();
};

struct RigidTransform {
  Mat3 rotation = Mat3::Identity();
  Vec3 translation = Vec3::Zero();
};

/// x -> scale * rotation * x + translation
struct SimilarityTransform {
  double scale = 1.0;
  Mat3 rotation = Mat3::Identity();
  Vec3 translation = Vec3::Zero();

  Joints3 apply(const Joints3& pts) const {
    Joints3 out = (scale * (pts * rotation.transpose())).eval();
    out.rowwise() += translation.transpose();
    return out;
  }
};

inline Vec2 project_point(const Vec3& p, const CameraIntrinsics& cam) {
  return {cam.fx * p.x() / p.z() + cam.cx, cam.fy * p.y() / p.z() + cam.cy};
}

/// Pinhole projection of a camera-frame pose. Confidences are set to 1.
inline Pose2D project(const Pose3D& pose, const CameraIntrinsics& cam) {
  const int n = pose.num_joints();
  Joints2 px(n, 2);
  for (int j = 0; j < n; ++j) {
    const double z = pose.joints(j, 2);
    if (!(z > 0.0)) throw NonPositiveDepth(j, z);
    px.row(j) = project_point(pose.joint(j), cam).transpose();
  }
  return Pose2D(std::move(px));
}

inline Ray pixel_to_ray(double u, double v, const CameraIntrinsics& cam) {
  return {cam.unproject(u, v).normalized()};
}

inline std::vector<Ray> pixels_to_rays(const Pose2D& p2d, const CameraIntrinsics& cam) {
  std::vector<Ray> rays;
  rays.reserve(p2d.num_joints());
  for (int j = 0; j < p2d.num_joints(); ++j)
    rays.push_back(pixel_to_ray(p2d.pixels(j, 0), p2d.pixels(j, 1), cam));
  return rays;
}

struct RayProjection {
  Pose3D pose;
  /// Joints whose shifted position had a non-positive component along the ray.
  std::vector<bool> behind_camera;

  int behind_count() const {
    int c = 0;
    for (bool b : behind_camera) c += b ? 1 : 0;
    return c;
  }
};

/// Moves every joint of (pose + translation) to its orthogonal projection on the
/// matching ray, then shifts back by -translation.
inline RayProjection project_onto_rays(const Pose3D& pose, const Vec3& translation,
                                       const std::vector<Ray>& rays) {
  const int n = pose.num_joints();
  if (static_cast<int>(rays.size()) != n)
    throw JointCountMismatch(std::to_string(rays.size()) + " rays for " + std::to_string(n) +
                             " joints");
  RayProjection out{pose, std::vector<bool>(n, false)};
  for (int j = 0; j < n; ++j) {
    const Vec3& r = rays[j].direction;
    const Vec3 shifted = pose.joint(j) + translation;
    const double along = shifted.dot(r);
    out.behind_camera[j] = !(along > 0.0);
    out.pose.joints.row(j) = (along * r - translation).transpose();
  }
  return out;
}

/// Right-handed rotation about the z axis.
inline Mat3 rotation_z(double angle) {
  const double c = std::cos(angle), s = std::sin(angle);
  Mat3 r;
  r << c, -s, 0.0, s, c, 0.0, 0.0, 0.0, 1.0;
  return r;
}

/// Right-handed rotation about an arbitrary axis (normalized internally).
inline Mat3 rotation_about(const Vec3& axis, double angle) {
  return Eigen::AngleAxisd(angle, axis.normalized()).toRotationMatrix();
}

enum class AlignMode { Similarity, Rigid };

struct ProcrustesResult {
  SimilarityTransform transform;
  Pose3D aligned;
};

/// Least-squares alignment of `source` onto `target` (Umeyama). In Rigid mode the
/// scale is pinned to 1.
inline ProcrustesResult procrustes_align(const Pose3D& source, const Pose3D& target,
                                         AlignMode mode = AlignMode::Similarity) {
  require_same_joints(source, target);
  const int n = source.num_joints();
  if (n < 3) throw WrongJointCount("Procrustes alignment needs at least 3 joints, got " +
                                   std::to_string(n));

  const Eigen::RowVector3d mu_s = source.joints.colwise().mean();
  const Eigen::RowVector3d mu_t = target.joints.colwise().mean();
  const Joints3 src = source.joints.rowwise() - mu_s;
  const Joints3 tgt = target.joints.rowwise() - mu_t;

  const double var_s = src.squaredNorm() / n;
  if (!(var_s > 1e-24)) throw DegeneratePose("source has zero spatial variance");

  const Mat3 cov = tgt.transpose() * src / n;
  Eigen::JacobiSVD<Mat3> svd(cov, Eigen::ComputeFullU | Eigen::ComputeFullV);
  Eigen::Vector3d d = Eigen::Vector3d::Ones();
  if (svd.matrixU().determinant() * svd.matrixV().determinant() < 0.0) d.z() = -1.0;

  SimilarityTransform tf;
  tf.rotation = svd.matrixU() * d.asDiagonal() * svd.matrixV().transpose();
  tf.scale = mode == AlignMode::Similarity ? svd.singularValues().dot(d) / var_s : 1.0;
  tf.translation = mu_t.transpose() - tf.scale * tf.rotation * mu_s.transpose();

  return {tf, Pose3D(tf.apply(source.joints), target.frame)};
}

}  // namespace zedo
