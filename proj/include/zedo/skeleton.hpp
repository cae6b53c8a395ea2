#pragma once

// Joint topology, pelvis-relative normalization and augmentations.

#include "zedo/core.hpp"
#include "zedo/geometry.hpp"

#include <algorithm>
#include <cstdint>
#include <string>
#include <utility>
#include <vector>

namespace zedo {

struct SkeletonSpec {
  std::vector<std::string> joint_names;
  int pelvis_index = 0;
  /// (left, right) joint pairs swapped by a mirror flip.
  std::vector<std::pair<int, int>> flip_pairs;
  /// parent[j] is the parent joint; -1 for the root.
  std::vector<int> parent;
  /// Ordered subset used for 14-joint evaluation.
  std::vector<int> lsp14_subset;

  int num_joints() const { return static_cast<int>(joint_names.size()); }

  /// Human3.6M 17-joint layout.
  static SkeletonSpec h36m17() {
    SkeletonSpec s;
    s.joint_names = {"pelvis",     "r_hip",      "r_knee",  "r_ankle",  "l_hip",    "l_knee",
                     "l_ankle",    "spine",      "thorax",  "neck",     "head",     "l_shoulder",
                     "l_elbow",    "l_wrist",    "r_shoulder", "r_elbow", "r_wrist"};
    s.pelvis_index = 0;
    s.parent = {-1, 0, 1, 2, 0, 4, 5, 0, 7, 8, 9, 8, 11, 12, 8, 14, 15};
    s.flip_pairs = {{4, 1}, {5, 2}, {6, 3}, {11, 14}, {12, 15}, {13, 16}};
    // r_ankle r_knee r_hip l_hip l_knee l_ankle r_wrist r_elbow r_shoulder
    // l_shoulder l_elbow l_wrist thorax head
    s.lsp14_subset = {3, 2, 1, 4, 5, 6, 16, 15, 14, 11, 12, 13, 8, 10};
    return s;
  }

  void validate() const {
    const int n = num_joints();
    auto in_range = [n](int j) { return j >= 0 && j < n; };
    if (n < 1) throw ConfigError("skeleton has no joints");
    if (!in_range(pelvis_index)) throw ConfigError("pelvis_index out of range");
    if (static_cast<int>(parent.size()) != n) throw ConfigError("parent array length != joint count");

    std::vector<int> seen(n, 0);
    for (auto [l, r] : flip_pairs) {
      if (!in_range(l) || !in_range(r) || l == r) throw ConfigError("invalid flip pair");
      if (seen[l]++ || seen[r]++) throw ConfigError("flip pairs are not disjoint");
    }

    for (int j = 0; j < n; ++j) {
      if (j == pelvis_index) {
        if (parent[j] != -1) throw ConfigError("root must have parent -1");
        continue;
      }
      if (!in_range(parent[j])) throw ConfigError("joint " + std::to_string(j) + " has invalid parent");
      // Walk to the root; a cycle would exceed n steps.
      int cur = j, steps = 0;
      while (cur != pelvis_index) {
        cur = parent[cur];
        if (cur < 0 || ++steps > n) throw ConfigError("parent array does not form a tree");
      }
    }

    if (!lsp14_subset.empty()) {
      if (lsp14_subset.size() != 14) throw ConfigError("lsp14_subset must list 14 joints");
      std::vector<int> sorted = lsp14_subset;
      std::sort(sorted.begin(), sorted.end());
      if (std::adjacent_find(sorted.begin(), sorted.end()) != sorted.end() ||
          !in_range(sorted.front()) || !in_range(sorted.back()))
        throw ConfigError("lsp14_subset must hold 14 distinct valid indices");
    }
  }

  /// Stable 64-bit FNV-1a digest of the topology, stored in pose file headers.
  std::uint64_t hash() const {
    std::uint64_t h = 1469598103934665603ULL;
    auto mix = [&h](std::int64_t v) {
      for (int b = 0; b < 8; ++b) {
        h ^= static_cast<std::uint64_t>((v >> (8 * b)) & 0xff);
        h *= 1099511628211ULL;
      }
    };
    mix(num_joints());
    mix(pelvis_index);
    for (int p : parent) mix(p);
    for (auto [l, r] : flip_pairs) {
      mix(l);
      mix(r);
    }
    for (int j : lsp14_subset) mix(j);
    return h;
  }
};

struct PelvisRelativePose {
  Pose3D pose;
  Vec3 pelvis_position;
};

inline PelvisRelativePose to_pelvis_relative(const Pose3D& pose, int pelvis_index) {
  const Vec3 pelvis = pose.joint(pelvis_index);
  Joints3 rel = pose.joints.rowwise() - pelvis.transpose();
  rel.row(pelvis_index).setZero();
  return {Pose3D(std::move(rel), Frame::PelvisRelative), pelvis};
}

inline PelvisRelativePose to_pelvis_relative(const Pose3D& pose, const SkeletonSpec& spec) {
  return to_pelvis_relative(pose, spec.pelvis_index);
}

inline Pose3D from_pelvis_relative(const Pose3D& rel, const Vec3& pelvis_position) {
  Joints3 abs = rel.joints.rowwise() + pelvis_position.transpose();
  return {std::move(abs), Frame::CameraAbsolute};
}

/// Mirror about the x = 0 plane and swap left/right joints.
inline Pose3D flip_lr(const Pose3D& pose, const SkeletonSpec& spec) {
  Pose3D out = pose;
  out.joints.col(0) = -out.joints.col(0);
  for (auto [l, r] : spec.flip_pairs) out.joints.row(l).swap(out.joints.row(r));
  return out;
}

inline Pose3D rotate_about_axis(const Pose3D& pose, const Vec3& axis, double angle) {
  const Mat3 r = rotation_about(axis, angle);
  return {(pose.joints * r.transpose()).eval(), pose.frame};
}

inline Pose3D rotate_about_z(const Pose3D& pose, double angle) {
  const Mat3 r = rotation_z(angle);
  return {(pose.joints * r.transpose()).eval(), pose.frame};
}

inline Pose3D select_lsp14(const Pose3D& pose, const SkeletonSpec& spec) {
  if (pose.num_joints() != 17)
    throw WrongJointCount("LSP-14 selection needs 17 joints, got " + std::to_string(pose.num_joints()));
  if (spec.lsp14_subset.size() != 14) throw ConfigError("skeleton has no lsp14_subset");
  Joints3 out(14, 3);
  for (int i = 0; i < 14; ++i) out.row(i) = pose.joints.row(spec.lsp14_subset[i]);
  return {std::move(out), pose.frame};
}

/// Parent-child distances in joint order; the root entry is 0.
inline std::vector<double> bone_lengths(const Pose3D& pose, const SkeletonSpec& spec) {
  std::vector<double> out(spec.num_joints(), 0.0);
  for (int j = 0; j < spec.num_joints(); ++j)
    if (spec.parent[j] >= 0) out[j] = (pose.joints.row(j) - pose.joints.row(spec.parent[j])).norm();
  return out;
}

}  // namespace zedo
