#pragma once

// "ZPSE" pose files. Layout (all integers little-endian):
//
//   0   4  magic "ZPSE"
//   4   2  u16 version (1)
//   6   2  u16 joint count J
//   8   8  u64 sample count N
//   16  1  u8 frame (0 camera-absolute, 1 pelvis-relative)
//   17  8  u64 skeleton hash
//   25     N*J*3 f32 coordinates in meters: sample by sample, joint by joint, x y z
//
// Coordinates are stored as 32-bit floats and widened to double on load.

#include "zedo/core.hpp"
#include "zedo/io/binary.hpp"

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

namespace zedo::io {

inline constexpr char kPoseMagic[4] = {'Z', 'P', 'S', 'E'};
inline constexpr std::uint16_t kPoseVersion = 1;
inline constexpr std::size_t kPoseHeaderSize = 25;

struct PoseFileHeader {
  std::uint16_t version = kPoseVersion;
  std::uint16_t joints = 0;
  std::uint64_t count = 0;
  Frame frame = Frame::CameraAbsolute;
  std::uint64_t skeleton_hash = 0;
};

struct PoseFile {
  PoseFileHeader header;
  std::vector<Pose3D> poses;
};

inline std::string encode_poses(const std::vector<Pose3D>& poses, Frame frame, std::uint64_t skeleton_hash,
                                int joints_if_empty = 0) {
  const int joints = poses.empty() ? joints_if_empty : poses.front().num_joints();
  if (joints < 0 || joints > 0xFFFF) throw ConfigError("joint count does not fit the pose file header");
  ByteWriter w;
  w.put_bytes({kPoseMagic, 4});
  w.put(kPoseVersion);
  w.put(static_cast<std::uint16_t>(joints));
  w.put(static_cast<std::uint64_t>(poses.size()));
  w.put(static_cast<std::uint8_t>(frame));
  w.put(skeleton_hash);
  for (const Pose3D& p : poses) {
    if (p.num_joints() != joints)
      throw JointCountMismatch("pose file expects " + std::to_string(joints) + " joints, got " +
                               std::to_string(p.num_joints()));
    if (p.frame != frame) throw ConfigError("pose frame differs from the file frame");
    for (int j = 0; j < joints; ++j)
      for (int k = 0; k < 3; ++k) w.put_f32(static_cast<float>(p.joints(j, k)));
  }
  return w.take();
}

/// Parses a pose file. `expected_joints`, when given, must match the header.
inline PoseFile decode_poses(std::string_view bytes, std::optional<int> expected_joints = std::nullopt) {
  ByteReader r(bytes);
  PoseFile f;
  if (r.get_bytes(4, "magic") != std::string_view(kPoseMagic, 4)) throw CorruptFile("bad magic, not a ZPSE file", 0);
  f.header.version = r.get<std::uint16_t>("version");
  if (f.header.version != kPoseVersion)
    throw FormatMismatch("pose file version " + std::to_string(f.header.version) + ", reader supports " +
                         std::to_string(kPoseVersion));
  f.header.joints = r.get<std::uint16_t>("joint count");
  if (expected_joints && *expected_joints != f.header.joints)
    throw FormatMismatch("pose file has J=" + std::to_string(f.header.joints) + ", expected J=" +
                         std::to_string(*expected_joints));
  f.header.count = r.get<std::uint64_t>("sample count");
  const std::uint64_t frame_offset = r.offset();
  const std::uint8_t frame = r.get<std::uint8_t>("frame");
  if (frame > 1) throw CorruptFile("unknown frame code " + std::to_string(frame), frame_offset);
  f.header.frame = static_cast<Frame>(frame);
  f.header.skeleton_hash = r.get<std::uint64_t>("skeleton hash");

  const std::uint64_t per_pose = static_cast<std::uint64_t>(f.header.joints) * 3 * 4;
  if (per_pose > 0 && f.header.count > r.remaining() / per_pose)
    throw CorruptFile("payload shorter than " + std::to_string(f.header.count) + " poses", r.offset());
  f.poses.reserve(f.header.count);
  for (std::uint64_t i = 0; i < f.header.count; ++i) {
    Joints3 j(f.header.joints, 3);
    for (int a = 0; a < f.header.joints; ++a)
      for (int k = 0; k < 3; ++k) j(a, k) = r.get_f32("coordinate");
    f.poses.emplace_back(std::move(j), f.header.frame);
  }
  if (r.remaining() != 0) throw CorruptFile("trailing bytes after payload", r.offset());
  return f;
}

inline void write_poses(const std::filesystem::path& path, const std::vector<Pose3D>& poses, Frame frame,
                        std::uint64_t skeleton_hash, int joints_if_empty = 0) {
  write_file_atomic(path, encode_poses(poses, frame, skeleton_hash, joints_if_empty));
}

inline PoseFile read_poses(const std::filesystem::path& path, std::optional<int> expected_joints = std::nullopt) {
  return decode_poses(read_file(path), expected_joints);
}

}  // namespace zedo::io
