#include "helpers.hpp"
#include "zedo/metrics.hpp"
#include "zedo/skeleton.hpp"

#include <gtest/gtest.h>

using namespace zedo;

namespace {

/// Mirror-symmetric T-pose in the h36m17 layout.
Pose3D t_pose() {
  Joints3 j(17, 3);
  j << 0, 0, 0,  -0.1, 0, 0,  -0.1, -0.45, 0,  -0.1, -0.9, 0,  0.1, 0, 0,  0.1, -0.45, 0,  0.1, -0.9, 0,
      0, 0.25, 0,  0, 0.5, 0,  0, 0.6, 0,  0, 0.7, 0,  0.15, 0.5, 0,  0.45, 0.5, 0,  0.7, 0.5, 0,
      -0.15, 0.5, 0,  -0.45, 0.5, 0,  -0.7, 0.5, 0;
  return {j, Frame::PelvisRelative};
}

}  // namespace

TEST(SkeletonSpec, DefaultIsValid) {
  const SkeletonSpec s = SkeletonSpec::h36m17();
  EXPECT_NO_THROW(s.validate());
  EXPECT_EQ(s.num_joints(), 17);
}

TEST(SkeletonSpec, RejectsBadTopology) {
  SkeletonSpec s = SkeletonSpec::h36m17();
  s.parent[3] = 3;
  EXPECT_THROW(s.validate(), ConfigError);
  s = SkeletonSpec::h36m17();
  s.flip_pairs.push_back({1, 5});
  EXPECT_THROW(s.validate(), ConfigError);
  s = SkeletonSpec::h36m17();
  s.pelvis_index = 17;
  EXPECT_THROW(s.validate(), ConfigError);
  s = SkeletonSpec::h36m17();
  s.lsp14_subset[0] = s.lsp14_subset[1];
  EXPECT_THROW(s.validate(), ConfigError);
}

TEST(SkeletonSpec, HashDependsOnTopology) {
  SkeletonSpec a = SkeletonSpec::h36m17(), b = a;
  EXPECT_EQ(a.hash(), b.hash());
  b.flip_pairs.pop_back();
  EXPECT_NE(a.hash(), b.hash());
}

TEST(PelvisRelative, PelvisAtOriginUnchanged) {
  std::mt19937_64 rng(1);
  const Pose3D p = test::random_relative_pose(rng, 17);
  const PelvisRelativePose r = to_pelvis_relative(p, 0);
  EXPECT_EQ(r.pose.joints, p.joints);
  EXPECT_EQ(r.pelvis_position, Vec3::Zero());
}

TEST(PelvisRelative, RoundTrip) {
  std::mt19937_64 rng(2);
  const Pose3D p = test::random_pose(rng, 17, 1.0, Frame::CameraAbsolute);
  const PelvisRelativePose r = to_pelvis_relative(p, SkeletonSpec::h36m17());
  EXPECT_EQ(r.pose.frame, Frame::PelvisRelative);
  EXPECT_EQ(r.pose.joints.row(0).norm(), 0.0);
  EXPECT_LE((from_pelvis_relative(r.pose, r.pelvis_position).joints - p.joints).cwiseAbs().maxCoeff(), 1e-15);
}

TEST(FlipLr, SymmetricPoseIsFixedPoint) {
  const Pose3D p = t_pose();
  EXPECT_LE((flip_lr(p, SkeletonSpec::h36m17()).joints - p.joints).cwiseAbs().maxCoeff(), 1e-12);
}

TEST(FlipLr, Involution) {
  std::mt19937_64 rng(3);
  const SkeletonSpec s = SkeletonSpec::h36m17();
  const Pose3D p = test::random_relative_pose(rng, 17);
  EXPECT_EQ(flip_lr(flip_lr(p, s), s).joints, p.joints);
}

TEST(FlipLr, PreservesBoneLengths) {
  std::mt19937_64 rng(4);
  const SkeletonSpec s = SkeletonSpec::h36m17();
  const Pose3D p = test::random_relative_pose(rng, 17);
  const auto a = bone_lengths(p, s), b = bone_lengths(flip_lr(p, s), s);
  for (auto [l, r] : s.flip_pairs) {
    EXPECT_NEAR(a[l], b[r], 1e-12);
    EXPECT_NEAR(a[r], b[l], 1e-12);
  }
}

TEST(Rotate, IdentityAtZero) {
  std::mt19937_64 rng(5);
  const Pose3D p = test::random_relative_pose(rng, 17);
  EXPECT_LE((rotate_about_z(p, 0.0).joints - p.joints).cwiseAbs().maxCoeff(), 0.0);
}

TEST(Rotate, BoneLengthsInvariant) {
  std::mt19937_64 rng(6);
  std::uniform_real_distribution<double> a(-7.0, 7.0);
  const SkeletonSpec s = SkeletonSpec::h36m17();
  const Pose3D p = test::random_relative_pose(rng, 17);
  const auto ref = bone_lengths(p, s);
  for (int i = 0; i < 20; ++i) {
    const auto got = bone_lengths(rotate_about_axis(p, Vec3(0.3, 1.0, -0.2), a(rng)), s);
    for (int j = 0; j < 17; ++j) EXPECT_NEAR(got[j], ref[j], 1e-12);
  }
}

TEST(Rotate, CompositionAdditive) {
  std::mt19937_64 rng(7);
  std::uniform_real_distribution<double> a(-4.0, 4.0);
  const Pose3D p = test::random_relative_pose(rng, 17);
  for (int i = 0; i < 20; ++i) {
    const double x = a(rng), y = a(rng);
    EXPECT_LE((rotate_about_z(rotate_about_z(p, x), y).joints - rotate_about_z(p, x + y).joints).cwiseAbs().maxCoeff(),
              1e-12);
  }
}

TEST(Lsp14, SubsetRows) {
  std::mt19937_64 rng(8);
  const SkeletonSpec s = SkeletonSpec::h36m17();
  const Pose3D p = test::random_pose(rng, 17);
  const Pose3D q = select_lsp14(p, s);
  ASSERT_EQ(q.num_joints(), 14);
  for (int i = 0; i < 14; ++i) EXPECT_EQ(q.joints.row(i), p.joints.row(s.lsp14_subset[i]));
}

TEST(Lsp14, MetricConsistency) {
  std::mt19937_64 rng(9);
  const SkeletonSpec s = SkeletonSpec::h36m17();
  const Pose3D a = test::random_pose(rng, 17), b = test::random_pose(rng, 17);
  const Pose3D sa = select_lsp14(a, s), sb = select_lsp14(b, s);
  double direct = 0.0;
  for (int j : s.lsp14_subset) direct += 1000.0 * (a.joints.row(j) - b.joints.row(j)).norm();
  MetricOptions abs;
  abs.root = RootAlignment::Absolute;
  EXPECT_NEAR(mpjpe(sa, sb, abs), direct / 14.0, 1e-9);
}

TEST(Lsp14, WrongJointCount) {
  EXPECT_THROW(select_lsp14(Pose3D(Joints3::Zero(16, 3), Frame::PelvisRelative), SkeletonSpec::h36m17()),
               WrongJointCount);
}
