#pragma once

#include "zedo/core.hpp"
#include "zedo/skeleton.hpp"

#include <random>

namespace zedo::test {

inline Pose3D random_pose(std::mt19937_64& rng, int joints, double scale = 0.5,
                          Frame frame = Frame::PelvisRelative) {
  std::normal_distribution<double> n(0.0, scale);
  Joints3 j(joints, 3);
  for (Eigen::Index i = 0; i < j.size(); ++i) j.data()[i] = n(rng);
  return {j, frame};
}

inline Pose3D random_relative_pose(std::mt19937_64& rng, int joints, double scale = 0.5) {
  Pose3D p = random_pose(rng, joints, scale);
  p.joints.row(0).setZero();
  return p;
}

inline Mat3 random_rotation(std::mt19937_64& rng) {
  std::normal_distribution<double> n(0.0, 1.0);
  Eigen::Quaterniond q(n(rng), n(rng), n(rng), n(rng));
  return q.normalized().toRotationMatrix();
}

inline CameraIntrinsics test_camera() { return {1000.0, 1000.0, 500.0, 500.0}; }

}  // namespace zedo::test
