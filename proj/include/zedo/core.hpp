#pragma once

// Shared value types and the error hierarchy used across the library.

#include <Eigen/Core>

#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <utility>

namespace zedo {

using Vec2 = Eigen::Vector2d;
using Vec3 = Eigen::Vector3d;
using Mat3 = Eigen::Matrix3d;

/// J x 3 joint coordinates, one joint per row.
using Joints3 = Eigen::Matrix<double, Eigen::Dynamic, 3, Eigen::RowMajor>;
/// J x 2 pixel coordinates, one joint per row.
using Joints2 = Eigen::Matrix<double, Eigen::Dynamic, 2, Eigen::RowMajor>;

enum class Frame : std::uint8_t { CameraAbsolute = 0, PelvisRelative = 1 };

inline const char* to_string(Frame f) {
  return f == Frame::CameraAbsolute ? "camera_absolute" : "pelvis_relative";
}

// ---------------------------------------------------------------------------
// Errors
// ---------------------------------------------------------------------------

/// Coarse classification used by the CLI to pick an exit code.
enum class ErrorCategory { Validation, Data, Numeric };

class Error : public std::runtime_error {
 public:
  Error(ErrorCategory category, const std::string& what)
      : std::runtime_error(what), category_(category) {}
  ErrorCategory category() const noexcept { return category_; }

 private:
  ErrorCategory category_;
};

#define ZEDO_DEFINE_ERROR(Name, Category)                                   \
  class Name : public Error {                                               \
   public:                                                                  \
    explicit Name(const std::string& what)                                  \
        : Error(ErrorCategory::Category, std::string(#Name ": ") + what) {} \
  };

ZEDO_DEFINE_ERROR(ConfigError, Validation)
ZEDO_DEFINE_ERROR(WrongJointCount, Validation)
ZEDO_DEFINE_ERROR(JointCountMismatch, Validation)
ZEDO_DEFINE_ERROR(OutOfRangeTime, Validation)
ZEDO_DEFINE_ERROR(InsufficientJoints, Validation)
ZEDO_DEFINE_ERROR(TooFewPoses, Validation)
ZEDO_DEFINE_ERROR(DegeneratePose, Numeric)
ZEDO_DEFINE_ERROR(NonFiniteLoss, Numeric)
ZEDO_DEFINE_ERROR(NonFinitePose, Numeric)
ZEDO_DEFINE_ERROR(SingularSystem, Numeric)
ZEDO_DEFINE_ERROR(AllCandidatesBehindCamera, Numeric)
ZEDO_DEFINE_ERROR(FormatMismatch, Data)
ZEDO_DEFINE_ERROR(ParseError, Data)

#undef ZEDO_DEFINE_ERROR

class NonPositiveDepth : public Error {
 public:
  NonPositiveDepth(int joint, double z)
      : Error(ErrorCategory::Numeric,
              "NonPositiveDepth: joint " + std::to_string(joint) + " has z = " + std::to_string(z)),
        joint_(joint) {}
  int joint() const noexcept { return joint_; }

 private:
  int joint_;
};

class CorruptFile : public Error {
 public:
  CorruptFile(const std::string& what, std::uint64_t offset)
      : Error(ErrorCategory::Data,
              "CorruptFile: " + what + " at byte offset " + std::to_string(offset)),
        offset_(offset) {}
  std::uint64_t offset() const noexcept { return offset_; }

 private:
  std::uint64_t offset_;
};

// ---------------------------------------------------------------------------
// Poses and camera
// ---------------------------------------------------------------------------

struct Pose3D {
  Joints3 joints;
  Frame frame = Frame::CameraAbsolute;

  Pose3D() = default;
  Pose3D(Joints3 j, Frame f) : joints(std::move(j)), frame(f) {}

  int num_joints() const { return static_cast<int>(joints.rows()); }
  Vec3 joint(int j) const { return joints.row(j).transpose(); }
  bool all_finite() const { return joints.allFinite(); }

  /// Row-major J*3 vector (x0 y0 z0 x1 ...), the layout the score network consumes.
  Eigen::VectorXd flattened() const {
    return Eigen::Map<const Eigen::VectorXd>(joints.data(), joints.size());
  }
  static Pose3D from_flat(const Eigen::Ref<const Eigen::VectorXd>& flat, Frame f) {
    Joints3 j = Eigen::Map<const Joints3>(flat.data(), flat.size() / 3, 3);
    return {std::move(j), f};
  }
};

struct Pose2D {
  Joints2 pixels;
  Eigen::VectorXd confidence;

  Pose2D() = default;
  Pose2D(Joints2 px, Eigen::VectorXd conf) : pixels(std::move(px)), confidence(std::move(conf)) {}
  explicit Pose2D(Joints2 px)
      : pixels(std::move(px)), confidence(Eigen::VectorXd::Ones(pixels.rows())) {}

  int num_joints() const { return static_cast<int>(pixels.rows()); }

  void validate() const {
    if (confidence.size() != pixels.rows())
      throw JointCountMismatch("confidence has " + std::to_string(confidence.size()) +
                               " entries for " + std::to_string(pixels.rows()) + " joints");
    if (!pixels.allFinite()) throw ParseError("non-finite pixel coordinate");
    for (Eigen::Index j = 0; j < confidence.size(); ++j)
      if (!(confidence[j] >= 0.0 && confidence[j] <= 1.0))
        throw ParseError("confidence of joint " + std::to_string(j) + " outside [0,1]");
  }
};

/// Zero-skew pinhole intrinsics.
struct CameraIntrinsics {
  double fx = 1.0;
  double fy = 1.0;
  double cx = 0.0;
  double cy = 0.0;

  void validate() const {
    if (!(fx > 0.0) || !(fy > 0.0) || !std::isfinite(fx) || !std::isfinite(fy) ||
        !std::isfinite(cx) || !std::isfinite(cy))
      throw ConfigError("camera intrinsics require finite fx > 0, fy > 0");
  }

  Mat3 matrix() const {
    Mat3 k;
    k << fx, 0.0, cx, 0.0, fy, cy, 0.0, 0.0, 1.0;
    return k;
  }

  /// K^-1 (u, v, 1)^T, computed without forming the inverse.
  Vec3 unproject(double u, double v) const { return {(u - cx) / fx, (v - cy) / fy, 1.0}; }

  friend bool operator==(const CameraIntrinsics&, const CameraIntrinsics&) = default;
};

inline void require_same_joints(const Pose3D& a, const Pose3D& b) {
  if (a.num_joints() != b.num_joints())
    throw JointCountMismatch(std::to_string(a.num_joints()) + " vs " +
                             std::to_string(b.num_joints()) + " joints");
}

}  // namespace zedo
