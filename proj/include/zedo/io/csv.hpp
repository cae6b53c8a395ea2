#pragma once

// 2D keypoint CSV. Header `frame,joint,u,v,confidence`, one row per joint; the
// confidence column is optional. Rows of one frame are contiguous, frames appear in
// increasing order and list every joint 0..J-1 exactly once.

#include "zedo/core.hpp"
#include "zedo/io/binary.hpp"

#include <charconv>
#include <cmath>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace zedo::io {

struct CsvKeypoints {
  std::vector<int> frame_ids;
  std::vector<Pose2D> frames;
  std::vector<std::string> warnings;
};

namespace detail {

inline std::vector<std::string_view> split_commas(std::string_view line) {
  std::vector<std::string_view> out;
  std::size_t start = 0;
  for (std::size_t i = 0; i <= line.size(); ++i) {
    if (i == line.size() || line[i] == ',') {
      std::string_view f = line.substr(start, i - start);
      while (!f.empty() && (f.front() == ' ' || f.front() == '\t')) f.remove_prefix(1);
      while (!f.empty() && (f.back() == ' ' || f.back() == '\t' || f.back() == '\r')) f.remove_suffix(1);
      out.push_back(f);
      start = i + 1;
    }
  }
  return out;
}

template <typename T>
T parse_field(std::string_view s, int line, const char* column) {
  T v{};
  const auto [end, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || end != s.data() + s.size() || s.empty())
    throw ParseError("line " + std::to_string(line) + ": malformed " + column + " '" + std::string(s) + "'");
  return v;
}

}  // namespace detail

inline CsvKeypoints parse_csv_keypoints(std::string_view text, std::optional<int> expected_joints = std::nullopt) {
  CsvKeypoints out;
  std::vector<std::string_view> lines;
  for (std::size_t start = 0; start < text.size();) {
    std::size_t nl = text.find('\n', start);
    if (nl == std::string_view::npos) nl = text.size();
    lines.push_back(text.substr(start, nl - start));
    start = nl + 1;
  }
  if (lines.empty()) throw ParseError("line 1: missing header");

  const auto header = detail::split_commas(lines[0]);
  const bool has_conf = header.size() == 5;
  const bool header_ok = (header.size() == 4 || has_conf) && header[0] == "frame" && header[1] == "joint" &&
                         header[2] == "u" && header[3] == "v" && (!has_conf || header[4] == "confidence");
  if (!header_ok) throw ParseError("line 1: expected header frame,joint,u,v[,confidence]");
  if (!has_conf) out.warnings.push_back("no confidence column; all confidences set to 1.0");

  struct Row {
    int joint;
    double u, v, c;
    int line;
  };
  std::vector<std::pair<int, std::vector<Row>>> grouped;
  for (std::size_t i = 1; i < lines.size(); ++i) {
    const int ln = static_cast<int>(i) + 1;
    std::string_view l = lines[i];
    while (!l.empty() && (l.back() == '\r' || l.back() == ' ')) l.remove_suffix(1);
    if (l.empty()) continue;
    const auto f = detail::split_commas(l);
    if (f.size() != header.size())
      throw ParseError("line " + std::to_string(ln) + ": expected " + std::to_string(header.size()) +
                       " fields, found " + std::to_string(f.size()));
    const int frame = detail::parse_field<int>(f[0], ln, "frame");
    Row r{detail::parse_field<int>(f[1], ln, "joint"), detail::parse_field<double>(f[2], ln, "u"),
          detail::parse_field<double>(f[3], ln, "v"), has_conf ? detail::parse_field<double>(f[4], ln, "confidence") : 1.0,
          ln};
    if (frame < 0 || r.joint < 0) throw ParseError("line " + std::to_string(ln) + ": negative index");
    if (!std::isfinite(r.u) || !std::isfinite(r.v)) throw ParseError("line " + std::to_string(ln) + ": non-finite pixel");
    if (!(r.c >= 0.0 && r.c <= 1.0)) throw ParseError("line " + std::to_string(ln) + ": confidence outside [0,1]");
    if (grouped.empty() || grouped.back().first != frame) {
      if (!grouped.empty() && frame < grouped.back().first)
        throw ParseError("line " + std::to_string(ln) + ": frame " + std::to_string(frame) + " out of order");
      grouped.emplace_back(frame, std::vector<Row>{});
    }
    grouped.back().second.push_back(r);
  }

  for (auto& [frame, rows] : grouped) {
    int joints = expected_joints.value_or(-1);
    if (joints < 0) joints = out.frames.empty() ? static_cast<int>(rows.size()) : out.frames.front().num_joints();
    if (static_cast<int>(rows.size()) != joints)
      throw ParseError("line " + std::to_string(rows.front().line) + ": frame " + std::to_string(frame) + " has " +
                       std::to_string(rows.size()) + " joints, expected " + std::to_string(joints));
    Pose2D p(Joints2(joints, 2), Eigen::VectorXd(joints));
    std::vector<char> seen(joints, 0);
    for (const Row& r : rows) {
      if (r.joint >= joints || seen[r.joint]++)
        throw ParseError("line " + std::to_string(r.line) + ": joint " + std::to_string(r.joint) +
                         " out of range or repeated");
      p.pixels(r.joint, 0) = r.u;
      p.pixels(r.joint, 1) = r.v;
      p.confidence[r.joint] = r.c;
    }
    out.frame_ids.push_back(frame);
    out.frames.push_back(std::move(p));
  }
  return out;
}

inline CsvKeypoints load_csv_keypoints(const std::filesystem::path& path, std::optional<int> expected_joints = std::nullopt) {
  return parse_csv_keypoints(read_file(path), expected_joints);
}

/// Shortest round-trip decimal form.
inline std::string format_double(double v) {
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof buf, v);
  return {buf, res.ptr};
}

inline std::string encode_csv_keypoints(const std::vector<Pose2D>& frames) {
  std::string s = "frame,joint,u,v,confidence\n";
  for (std::size_t f = 0; f < frames.size(); ++f) {
    const Pose2D& p = frames[f];
    for (int j = 0; j < p.num_joints(); ++j) {
      s += std::to_string(f) + ',' + std::to_string(j) + ',' + format_double(p.pixels(j, 0)) + ',' +
           format_double(p.pixels(j, 1)) + ',' + format_double(p.confidence[j]) + '\n';
    }
  }
  return s;
}

inline void write_csv_keypoints(const std::filesystem::path& path, const std::vector<Pose2D>& frames) {
  write_file_atomic(path, encode_csv_keypoints(frames));
}

}  // namespace zedo::io
