#include "helpers.hpp"
#include "zedo/geometry.hpp"

#include <gtest/gtest.h>

#include <numbers>

using namespace zedo;

namespace {
constexpr double kPi = std::numbers::pi;
}

TEST(Project, PrincipalAxisPoint) {
  Pose3D p(Joints3{{0.0, 0.0, 1.0}}, Frame::CameraAbsolute);
  const Pose2D px = project(p, {1.0, 1.0, 0.0, 0.0});
  EXPECT_EQ(px.pixels(0, 0), 0.0);
  EXPECT_EQ(px.pixels(0, 1), 0.0);
}

TEST(Project, PinholeFormula) {
  Pose3D p(Joints3{{1.0, 2.0, 2.0}}, Frame::CameraAbsolute);
  const Pose2D px = project(p, {100.0, 100.0, 50.0, 50.0});
  EXPECT_DOUBLE_EQ(px.pixels(0, 0), 100.0);
  EXPECT_DOUBLE_EQ(px.pixels(0, 1), 150.0);
  EXPECT_EQ(px.confidence[0], 1.0);
}

TEST(Project, NonPositiveDepthNamesJoint) {
  Pose3D p(Joints3{{0.0, 0.0, 1.0}, {0.0, 0.0, 1.0}, {1.0, 0.0, -0.5}}, Frame::CameraAbsolute);
  try {
    project(p, test::test_camera());
    FAIL() << "expected NonPositiveDepth";
  } catch (const NonPositiveDepth& e) {
    EXPECT_EQ(e.joint(), 2);
    EXPECT_NE(std::string(e.what()).find("joint 2"), std::string::npos);
  }
}

TEST(PixelToRay, PrincipalPointIsOpticalAxis) {
  const CameraIntrinsics cam{800.0, 700.0, 320.0, 240.0};
  const Ray r = pixel_to_ray(cam.cx, cam.cy, cam);
  EXPECT_NEAR((r.direction - Vec3::UnitZ()).norm(), 0.0, 1e-15);
}

TEST(PixelToRay, UnitNormalizedOffset) {
  const CameraIntrinsics cam{800.0, 700.0, 320.0, 240.0};
  const Ray r = pixel_to_ray(cam.cx + cam.fx, cam.cy, cam);
  EXPECT_NEAR((r.direction - Vec3(1.0, 0.0, 1.0) / std::sqrt(2.0)).norm(), 0.0, 1e-15);
}

TEST(PixelToRay, ProjectingAlongRayReturnsPixel) {
  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> u(0.0, 1000.0), d(0.5, 20.0);
  const CameraIntrinsics cam = test::test_camera();
  for (int i = 0; i < 100; ++i) {
    const double px = u(rng), py = u(rng);
    const Vec3 p = d(rng) * pixel_to_ray(px, py, cam).direction;
    const Vec2 back = project_point(p, cam);
    EXPECT_NEAR(back.x(), px, 1e-9);
    EXPECT_NEAR(back.y(), py, 1e-9);
  }
}

TEST(ProjectOntoRays, JointOnRayUnchanged) {
  std::mt19937_64 rng(4);
  const CameraIntrinsics cam = test::test_camera();
  Pose3D pose = test::random_pose(rng, 17, 0.3);
  const Vec3 t(0.1, -0.2, 5.0);
  const Pose2D px = project(Pose3D((pose.joints.rowwise() + t.transpose()).eval(), Frame::CameraAbsolute), cam);
  const RayProjection out = project_onto_rays(pose, t, pixels_to_rays(px, cam));
  EXPECT_LE((out.pose.joints - pose.joints).cwiseAbs().maxCoeff(), 1e-12);
  EXPECT_EQ(out.behind_count(), 0);
}

TEST(ProjectOntoRays, OrthogonalProjectionOntoAxis) {
  Pose3D pose(Joints3{{1.0, 0.0, 1.0}}, Frame::PelvisRelative);
  const RayProjection out = project_onto_rays(pose, Vec3::Zero(), {Ray{Vec3::UnitZ()}});
  EXPECT_NEAR((out.pose.joint(0) - Vec3(0.0, 0.0, 1.0)).norm(), 0.0, 1e-15);
}

TEST(ProjectOntoRays, Idempotent) {
  std::mt19937_64 rng(5);
  const CameraIntrinsics cam = test::test_camera();
  const Vec3 t(0.0, 0.0, 4.0);
  const Pose3D target = test::random_pose(rng, 17, 0.4);
  const Pose2D px = project(Pose3D((target.joints.rowwise() + t.transpose()).eval(), Frame::CameraAbsolute), cam);
  const auto rays = pixels_to_rays(px, cam);
  const RayProjection once = project_onto_rays(test::random_pose(rng, 17, 0.4), t, rays);
  const RayProjection twice = project_onto_rays(once.pose, t, rays);
  EXPECT_LE((once.pose.joints - twice.pose.joints).cwiseAbs().maxCoeff(), 1e-12);
}

TEST(ProjectOntoRays, FlagsJointsBehindCamera) {
  Pose3D pose(Joints3{{0.0, 0.0, -2.0}, {0.0, 0.0, 2.0}}, Frame::PelvisRelative);
  const RayProjection out = project_onto_rays(pose, Vec3::Zero(), {Ray{Vec3::UnitZ()}, Ray{Vec3::UnitZ()}});
  EXPECT_TRUE(out.behind_camera[0]);
  EXPECT_FALSE(out.behind_camera[1]);
}

TEST(ProjectOntoRays, RayCountMismatch) {
  Pose3D pose(Joints3::Zero(3, 3), Frame::PelvisRelative);
  EXPECT_THROW(project_onto_rays(pose, Vec3::Zero(), {Ray{}}), JointCountMismatch);
}

TEST(RotationZ, Basics) {
  EXPECT_LE((rotation_z(0.0) - Mat3::Identity()).norm(), 0.0);
  EXPECT_NEAR((rotation_z(kPi) * Vec3::UnitX() - Vec3(-1.0, 0.0, 0.0)).norm(), 0.0, 1e-12);
}

TEST(RotationZ, Composition) {
  std::mt19937_64 rng(6);
  std::uniform_real_distribution<double> a(-10.0, 10.0);
  for (int i = 0; i < 100; ++i) {
    const double x = a(rng), y = a(rng);
    EXPECT_LE((rotation_z(x) * rotation_z(y) - rotation_z(x + y)).cwiseAbs().maxCoeff(), 1e-12);
  }
}

TEST(RotationAbout, MatchesRodrigues) {
  std::mt19937_64 rng(7);
  std::normal_distribution<double> n(0.0, 1.0);
  for (int i = 0; i < 50; ++i) {
    const Vec3 k = Vec3(n(rng), n(rng), n(rng)).normalized();
    const double a = n(rng);
    Mat3 kx;
    kx << 0, -k.z(), k.y(), k.z(), 0, -k.x(), -k.y(), k.x(), 0;
    const Mat3 expected = Mat3::Identity() + std::sin(a) * kx + (1.0 - std::cos(a)) * kx * kx;
    EXPECT_LE((rotation_about(k * 3.0, a) - expected).cwiseAbs().maxCoeff(), 1e-12);
  }
}

TEST(Procrustes, Identity) {
  std::mt19937_64 rng(8);
  const Pose3D p = test::random_pose(rng, 17);
  const ProcrustesResult r = procrustes_align(p, p);
  EXPECT_NEAR(r.transform.scale, 1.0, 1e-9);
  EXPECT_LE((r.transform.rotation - Mat3::Identity()).norm(), 1e-9);
  EXPECT_LE((r.aligned.joints - p.joints).cwiseAbs().maxCoeff(), 1e-9);
}

TEST(Procrustes, RecoversSimilarity) {
  std::mt19937_64 rng(9);
  const Pose3D src = test::random_pose(rng, 17);
  SimilarityTransform tf{2.0, rotation_z(kPi / 6.0), Vec3(1.0, 2.0, 3.0)};
  const Pose3D tgt(tf.apply(src.joints), Frame::CameraAbsolute);
  const ProcrustesResult r = procrustes_align(src, tgt);
  EXPECT_NEAR(r.transform.scale, 2.0, 1e-9);
  EXPECT_LE((r.transform.rotation - tf.rotation).cwiseAbs().maxCoeff(), 1e-9);
  EXPECT_LE((r.aligned.joints - tgt.joints).cwiseAbs().maxCoeff(), 1e-9);
}

TEST(Procrustes, ColinearSource) {
  Pose3D src(Joints3{{0.0, 0.0, 0.0}, {1.0, 0.0, 0.0}, {3.0, 0.0, 0.0}}, Frame::PelvisRelative);
  std::mt19937_64 rng(10);
  const Mat3 rot = test::random_rotation(rng);
  const Pose3D tgt((src.joints * rot.transpose()).eval(), Frame::PelvisRelative);
  const ProcrustesResult r = procrustes_align(src, tgt);
  EXPECT_LE((r.aligned.joints - tgt.joints).cwiseAbs().maxCoeff(), 1e-9);
  EXPECT_NEAR(r.transform.rotation.determinant(), 1.0, 1e-9);
}

TEST(Procrustes, NeverReflects) {
  std::mt19937_64 rng(11);
  const Pose3D src = test::random_pose(rng, 17);
  Pose3D mirrored = src;
  mirrored.joints.col(0) *= -1.0;
  const ProcrustesResult r = procrustes_align(src, mirrored);
  EXPECT_NEAR(r.transform.rotation.determinant(), 1.0, 1e-9);
}

TEST(Procrustes, RigidModeKeepsScale) {
  std::mt19937_64 rng(12);
  const Pose3D src = test::random_pose(rng, 17);
  const Pose3D tgt((3.0 * src.joints).eval(), Frame::PelvisRelative);
  EXPECT_EQ(procrustes_align(src, tgt, AlignMode::Rigid).transform.scale, 1.0);
}

TEST(Procrustes, Errors) {
  Pose3D two(Joints3::Zero(2, 3), Frame::PelvisRelative);
  EXPECT_THROW(procrustes_align(two, two), WrongJointCount);
  Pose3D flat(Joints3::Ones(4, 3), Frame::PelvisRelative);
  EXPECT_THROW(procrustes_align(flat, flat), DegeneratePose);
  Pose3D four(Joints3::Zero(4, 3), Frame::PelvisRelative);
  EXPECT_THROW(procrustes_align(four, Pose3D(Joints3::Zero(5, 3), Frame::PelvisRelative)), JointCountMismatch);
}
