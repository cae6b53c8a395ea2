#pragma once

// "ZCKP" score-model checkpoints. Layout (little-endian):
//
//   0   4  magic "ZCKP"
//   4   2  u16 version (1)
//   6   2  u16 joint count J
//   8   4  u32 hidden width
//   12  4  u32 residual blocks
//   16  4  u32 time features E
//   20  4  u32 pelvis index
//   24  8  f64 Fourier scale
//   32  8  f64 beta_min
//   40  8  f64 beta_max
//   48  8  u64 parameter count P
//   56     E f32 Fourier frequencies, E f32 phases, P f32 parameters

#include "zedo/core.hpp"
#include "zedo/diffusion/score_model.hpp"
#include "zedo/io/binary.hpp"

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

namespace zedo::io {

inline constexpr char kCheckpointMagic[4] = {'Z', 'C', 'K', 'P'};
inline constexpr std::uint16_t kCheckpointVersion = 1;

template <typename Scalar>
std::string encode_checkpoint(const ScoreModel<Scalar>& model) {
  const ModelDims& d = model.dims();
  ByteWriter w;
  w.put_bytes({kCheckpointMagic, 4});
  w.put(kCheckpointVersion);
  w.put(static_cast<std::uint16_t>(d.joints));
  w.put(static_cast<std::uint32_t>(d.hidden));
  w.put(static_cast<std::uint32_t>(d.depth));
  w.put(static_cast<std::uint32_t>(d.time_features));
  w.put(static_cast<std::uint32_t>(d.pelvis_index));
  w.put_f64(d.fourier_scale);
  w.put_f64(model.sde().beta_min);
  w.put_f64(model.sde().beta_max);
  w.put(static_cast<std::uint64_t>(model.param_count()));
  for (Scalar v : model.fourier_freq()) w.put_f32(static_cast<float>(v));
  for (Scalar v : model.fourier_phase()) w.put_f32(static_cast<float>(v));
  for (Scalar v : model.params()) w.put_f32(static_cast<float>(v));
  return w.take();
}

/// Rebuilds a model; when `expected` is given, any dims difference is an error.
template <typename Scalar = float>
ScoreModel<Scalar> decode_checkpoint(std::string_view bytes, std::optional<ModelDims> expected = std::nullopt) {
  ByteReader r(bytes);
  if (r.get_bytes(4, "magic") != std::string_view(kCheckpointMagic, 4))
    throw CorruptFile("bad magic, not a ZCKP file", 0);
  const std::uint16_t version = r.get<std::uint16_t>("version");
  if (version != kCheckpointVersion)
    throw FormatMismatch("checkpoint version " + std::to_string(version) + ", reader supports " +
                         std::to_string(kCheckpointVersion));
  ModelDims d;
  d.joints = r.get<std::uint16_t>("joint count");
  d.hidden = static_cast<int>(r.get<std::uint32_t>("hidden width"));
  d.depth = static_cast<int>(r.get<std::uint32_t>("depth"));
  d.time_features = static_cast<int>(r.get<std::uint32_t>("time features"));
  d.pelvis_index = static_cast<int>(r.get<std::uint32_t>("pelvis index"));
  d.fourier_scale = r.get_f64("fourier scale");
  SdeConfig sde;
  sde.beta_min = r.get_f64("beta_min");
  sde.beta_max = r.get_f64("beta_max");
  const std::uint64_t count = r.get<std::uint64_t>("parameter count");

  if (expected) {
    if (expected->joints != d.joints)
      throw FormatMismatch("checkpoint has J=" + std::to_string(d.joints) + ", expected J=" +
                           std::to_string(expected->joints));
    if (!(*expected == d))
      throw FormatMismatch("checkpoint dims H=" + std::to_string(d.hidden) + " D=" + std::to_string(d.depth) +
                           " E=" + std::to_string(d.time_features) + " differ from expected H=" +
                           std::to_string(expected->hidden) + " D=" + std::to_string(expected->depth) +
                           " E=" + std::to_string(expected->time_features));
  }
  d.validate();
  sde.validate();

  const std::uint64_t e = static_cast<std::uint64_t>(d.time_features);
  if (count > r.remaining() / 4 || 2 * e > r.remaining() / 4 - count)
    throw CorruptFile("payload shorter than declared", r.offset());
  using Vec = typename ScoreModel<Scalar>::Vec;
  Vec freq(d.time_features), phase(d.time_features);
  for (Eigen::Index i = 0; i < freq.size(); ++i) freq[i] = static_cast<Scalar>(r.get_f32("frequency"));
  for (Eigen::Index i = 0; i < phase.size(); ++i) phase[i] = static_cast<Scalar>(r.get_f32("phase"));
  std::vector<Scalar> params(count);
  for (auto& p : params) p = static_cast<Scalar>(r.get_f32("parameter"));
  if (r.remaining() != 0) throw CorruptFile("trailing bytes after parameters", r.offset());
  return ScoreModel<Scalar>(d, sde, std::move(freq), std::move(phase), std::move(params));
}

template <typename Scalar>
void save_checkpoint(const std::filesystem::path& path, const ScoreModel<Scalar>& model) {
  write_file_atomic(path, encode_checkpoint(model));
}

template <typename Scalar = float>
ScoreModel<Scalar> load_checkpoint(const std::filesystem::path& path, std::optional<ModelDims> expected = std::nullopt) {
  return decode_checkpoint<Scalar>(read_file(path), expected);
}

}  // namespace zedo::io
