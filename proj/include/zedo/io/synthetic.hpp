#pragma once

// Forward-kinematic pose sampler and camera placement for desk-scale datasets.
//
// Body frame: x toward the subject's left, y up, z forward. Every joint with an
// articulation rotates the bones to its children by R = Ry(y) Rx(x) Rz(z), composed
// onto its parent's global rotation. The camera sits in front of the subject
// (before the random facing yaw is applied) and looks at the pelvis; camera axes
// are x right, y down, z forward.

#include "zedo/core.hpp"
#include "zedo/geometry.hpp"
#include "zedo/skeleton.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <numbers>
#include <random>
#include <string>
#include <vector>

namespace zedo {

struct AngleRange {
  double lo = 0.0;
  double hi = 0.0;
};

/// Euler-angle limits (degrees) for the joint that drives its child bones.
struct Articulation {
  int joint = 0;
  AngleRange x, y, z;
};

struct SyntheticConfig {
  int count = 10000;
  std::uint64_t seed = 0;
  /// Length of the bone ending at each joint (meters); the root entry is ignored.
  std::vector<double> bone_lengths;
  /// Unit rest direction of the bone ending at each joint, body frame.
  std::vector<Vec3> rest_directions;
  std::vector<Articulation> articulations;
  AngleRange fov_deg{45.0, 70.0};
  AngleRange distance_m{3.5, 6.0};
  /// Camera height relative to the pelvis.
  AngleRange height_m{-0.5, 1.0};
  int image_width = 1000;
  int image_height = 1000;
  double principal_jitter_px = 10.0;
  double noise_sigma_px = 0.0;

  /// Average adult proportions for the 17-joint layout.
  static SyntheticConfig h36m17_defaults() {
    SyntheticConfig c;
    c.bone_lengths = {0.0,  0.13, 0.45, 0.44, 0.13, 0.45, 0.44, 0.23, 0.25,
                      0.12, 0.12, 0.15, 0.28, 0.25, 0.15, 0.28, 0.25};
    const Vec3 up = Vec3::UnitY(), down = -Vec3::UnitY();
    c.rest_directions = {Vec3::Zero(),
                         -Vec3::UnitX(), down, down,
                         Vec3::UnitX(), down, down,
                         up, up, Vec3(0.0, 1.0, 0.25).normalized(), up,
                         Vec3(1.0, -0.1, 0.0).normalized(), down, down,
                         Vec3(-1.0, -0.1, 0.0).normalized(), down, down};
    c.articulations = {
        {0, {-5, 15}, {-180, 180}, {-5, 5}},     // pelvis: lean, facing, roll
        {1, {-60, 25}, {-15, 15}, {-20, 5}},     // r_hip
        {2, {0, 90}, {0, 0}, {0, 0}},            // r_knee
        {4, {-60, 25}, {-15, 15}, {-5, 20}},     // l_hip
        {5, {0, 90}, {0, 0}, {0, 0}},            // l_knee
        {7, {-5, 25}, {-20, 20}, {-10, 10}},     // spine
        {8, {-5, 10}, {-10, 10}, {-5, 5}},       // thorax
        {9, {-15, 25}, {-30, 30}, {-10, 10}},    // neck
        {11, {-90, 30}, {-20, 20}, {5, 60}},     // l_shoulder
        {12, {-110, 0}, {0, 0}, {0, 0}},         // l_elbow
        {14, {-90, 30}, {-20, 20}, {-60, -5}},   // r_shoulder
        {15, {-110, 0}, {0, 0}, {0, 0}},         // r_elbow
    };
    return c;
  }

  void validate(const SkeletonSpec& spec) const {
    const int n = spec.num_joints();
    if (count < 1) throw ConfigError("synthetic count must be >= 1");
    if (static_cast<int>(bone_lengths.size()) != n || static_cast<int>(rest_directions.size()) != n)
      throw ConfigError("bone_lengths and rest_directions need one entry per joint");
    for (int j = 0; j < n; ++j) {
      if (j == spec.pelvis_index) continue;
      if (!(bone_lengths[j] > 0.0)) throw ConfigError("bone length of joint " + std::to_string(j) + " must be positive");
      if (std::abs(rest_directions[j].norm() - 1.0) > 1e-6)
        throw ConfigError("rest direction of joint " + std::to_string(j) + " must be unit length");
    }
    auto ordered = [](const AngleRange& r) { return r.lo <= r.hi; };
    for (const Articulation& a : articulations) {
      if (a.joint < 0 || a.joint >= n) throw ConfigError("articulation joint out of range");
      if (!ordered(a.x) || !ordered(a.y) || !ordered(a.z)) throw ConfigError("angle range with lo > hi");
    }
    if (!(fov_deg.lo > 0.0 && fov_deg.hi < 180.0 && fov_deg.lo <= fov_deg.hi))
      throw ConfigError("fov range must lie in (0, 180)");
    if (!(distance_m.lo > 0.0 && distance_m.lo <= distance_m.hi)) throw ConfigError("distance range invalid");
    if (!(height_m.lo <= height_m.hi)) throw ConfigError("height range invalid");
    if (image_width < 1 || image_height < 1) throw ConfigError("image size must be positive");
    if (!(noise_sigma_px >= 0.0) || !(principal_jitter_px >= 0.0)) throw ConfigError("noise and jitter must be >= 0");
  }
};

struct SyntheticRecord {
  int index = 0;
  double facing_deg = 0.0;
  double distance_m = 0.0;
  double height_m = 0.0;
  double fov_deg = 0.0;
};

struct SyntheticDataset {
  std::vector<Pose3D> poses3d;  // camera frame, absolute
  std::vector<Pose2D> poses2d;
  std::vector<CameraIntrinsics> cameras;
  std::vector<SyntheticRecord> records;
};

namespace detail {

inline double deg2rad(double d) { return d * std::numbers::pi / 180.0; }

inline Mat3 euler_yxz(double x, double y, double z) {
  return rotation_about(Vec3::UnitY(), y) * rotation_about(Vec3::UnitX(), x) *
         rotation_about(Vec3::UnitZ(), z);
}

/// Joints ordered so that every parent precedes its children.
inline std::vector<int> topological_order(const SkeletonSpec& spec) {
  std::vector<int> order{spec.pelvis_index};
  for (std::size_t i = 0; i < order.size(); ++i)
    for (int j = 0; j < spec.num_joints(); ++j)
      if (spec.parent[j] == order[i]) order.push_back(j);
  return order;
}

}  // namespace detail

/// One body-frame pose (pelvis at the origin) plus the sampled facing angle.
inline Pose3D sample_body_pose(const SyntheticConfig& cfg, const SkeletonSpec& spec, std::mt19937_64& rng,
                               double* facing_deg = nullptr) {
  std::uniform_real_distribution<double> unif(0.0, 1.0);
  const int n = spec.num_joints();
  std::vector<Mat3> local(n, Mat3::Identity());
  for (const Articulation& a : cfg.articulations) {
    auto draw = [&](const AngleRange& r) { return r.lo + (r.hi - r.lo) * unif(rng); };
    const double x = draw(a.x), y = draw(a.y), z = draw(a.z);
    if (a.joint == spec.pelvis_index && facing_deg) *facing_deg = y;
    local[a.joint] = detail::euler_yxz(detail::deg2rad(x), detail::deg2rad(y), detail::deg2rad(z));
  }

  std::vector<Mat3> global(n, Mat3::Identity());
  Joints3 joints = Joints3::Zero(n, 3);
  for (int j : detail::topological_order(spec)) {
    const int p = spec.parent[j];
    if (p < 0) {
      global[j] = local[j];
      continue;
    }
    global[j] = global[p] * local[j];
    joints.row(j) = joints.row(p) + (global[p] * (cfg.rest_directions[j] * cfg.bone_lengths[j])).transpose();
  }
  return {std::move(joints), Frame::PelvisRelative};
}

/// Samples poses, places a camera per sample and renders 2D keypoints.
inline SyntheticDataset generate_synthetic(const SyntheticConfig& cfg, const SkeletonSpec& spec) {
  spec.validate();
  cfg.validate(spec);
  std::mt19937_64 rng(cfg.seed);
  std::uniform_real_distribution<double> unif(0.0, 1.0);
  std::normal_distribution<double> normal(0.0, 1.0);
  auto draw = [&](const AngleRange& r) { return r.lo + (r.hi - r.lo) * unif(rng); };

  SyntheticDataset out;
  for (int i = 0; i < cfg.count; ++i) {
    SyntheticRecord rec;
    rec.index = i;
    const Pose3D body = sample_body_pose(cfg, spec, rng, &rec.facing_deg);

    rec.distance_m = draw(cfg.distance_m);
    rec.height_m = draw(cfg.height_m);
    rec.fov_deg = draw(cfg.fov_deg);
    const Vec3 eye(0.0, rec.height_m, rec.distance_m);
    const Vec3 forward = (-eye).normalized();
    const Vec3 right = forward.cross(Vec3::UnitY()).normalized();
    const Vec3 down = forward.cross(right);
    Mat3 world_to_cam;
    world_to_cam.row(0) = right.transpose();
    world_to_cam.row(1) = down.transpose();
    world_to_cam.row(2) = forward.transpose();

    Joints3 cam_joints = (body.joints.rowwise() - eye.transpose()) * world_to_cam.transpose();
    Pose3D pose(std::move(cam_joints), Frame::CameraAbsolute);

    CameraIntrinsics cam;
    cam.fx = cam.fy = 0.5 * cfg.image_width / std::tan(0.5 * detail::deg2rad(rec.fov_deg));
    cam.cx = 0.5 * cfg.image_width + cfg.principal_jitter_px * (2.0 * unif(rng) - 1.0);
    cam.cy = 0.5 * cfg.image_height + cfg.principal_jitter_px * (2.0 * unif(rng) - 1.0);

    Pose2D p2d = project(pose, cam);
    if (cfg.noise_sigma_px > 0.0) {
      const double s = cfg.noise_sigma_px;
      for (int j = 0; j < p2d.num_joints(); ++j) {
        const Vec2 noise(s * normal(rng), s * normal(rng));
        p2d.pixels.row(j) += noise.transpose();
        p2d.confidence[j] = std::clamp(std::exp(-noise.squaredNorm() / (2.0 * s * s)), 0.1, 1.0);
      }
    }

    out.poses3d.push_back(std::move(pose));
    out.poses2d.push_back(std::move(p2d));
    out.cameras.push_back(cam);
    out.records.push_back(rec);
  }
  return out;
}

}  // namespace zedo
