#pragma once

// JSON forms of the configuration structs and the camera sidecar.
//
// `update_from_json(j, cfg)` overwrites only the keys present in `j`, so a file can
// override a subset of the defaults. Unknown keys are rejected to catch typos.
// `to_json(cfg)` always emits every field.

#include "zedo/anchors.hpp"
#include "zedo/core.hpp"
#include "zedo/diffusion/reverse.hpp"
#include "zedo/diffusion/score_model.hpp"
#include "zedo/diffusion/sde.hpp"
#include "zedo/diffusion/training.hpp"
#include "zedo/io/binary.hpp"
#include "zedo/io/synthetic.hpp"
#include "zedo/metrics.hpp"
#include "zedo/optimizer.hpp"
#include "zedo/skeleton.hpp"

#include "json.hpp"

#include <filesystem>
#include <set>
#include <string>
#include <vector>

namespace zedo::io {

using json = nlohmann::json;

namespace detail {

/// Reads the keys of one JSON object and reports leftovers.
class Fields {
 public:
  Fields(const json& j, std::string context) : j_(j), ctx_(std::move(context)) {
    if (!j_.is_object()) throw ConfigError(ctx_ + ": expected a JSON object");
  }

  template <typename T>
  void get(const char* key, T& out) {
    if (!j_.contains(key)) return;
    seen_.insert(key);
    try {
      out = j_.at(key).get<T>();
    } catch (const json::exception& e) {
      throw ConfigError(ctx_ + "." + key + ": " + e.what());
    }
  }

  void get(const char* key, Vec3& out) {
    if (!j_.contains(key)) return;
    seen_.insert(key);
    const json& a = j_.at(key);
    if (!a.is_array() || a.size() != 3) throw ConfigError(ctx_ + "." + key + ": expected [x, y, z]");
    for (int k = 0; k < 3; ++k) {
      if (!a[k].is_number()) throw ConfigError(ctx_ + "." + key + ": expected numbers");
      out[k] = a[k].get<double>();
    }
  }

  template <typename Fn>
  void with(const char* key, Fn&& fn) {
    if (!j_.contains(key)) return;
    seen_.insert(key);
    fn(j_.at(key), ctx_ + "." + key);
  }

  void finish() const {
    for (auto it = j_.begin(); it != j_.end(); ++it)
      if (!seen_.count(it.key())) throw ConfigError("unknown key " + ctx_ + "." + it.key());
  }

 private:
  const json& j_;
  std::string ctx_;
  std::set<std::string> seen_;
};

inline json vec3(const Vec3& v) { return json::array({v.x(), v.y(), v.z()}); }

template <typename E, std::size_t N>
E enum_from(const json& j, const std::string& ctx, const std::pair<E, const char*> (&names)[N]) {
  if (!j.is_string()) throw ConfigError(ctx + ": expected a string");
  const std::string s = j.get<std::string>();
  for (const auto& [value, name] : names)
    if (s == name) return value;
  throw ConfigError(ctx + ": unknown value '" + s + "'");
}

template <typename E, std::size_t N>
const char* enum_name(E e, const std::pair<E, const char*> (&names)[N]) {
  for (const auto& [value, name] : names)
    if (value == e) return name;
  return "unknown";
}

inline constexpr std::pair<TimeSampling, const char*> kTimeSampling[] = {
    {TimeSampling::UniformPerIter, "uniform"}, {TimeSampling::LinearDecay, "linear_decay"}};
inline constexpr std::pair<ForwardInput, const char*> kForwardInput[] = {
    {ForwardInput::AsNoisy, "as_noisy"}, {ForwardInput::Mean, "mean"}, {ForwardInput::Sample, "sample"}};
inline constexpr std::pair<Integrator, const char*> kIntegrator[] = {{Integrator::Euler, "euler"},
                                                                     {Integrator::Exponential, "exponential"}};
inline constexpr std::pair<RootAlignment, const char*> kRootAlignment[] = {
    {RootAlignment::PelvisAligned, "pelvis"}, {RootAlignment::Absolute, "absolute"}};
inline constexpr std::pair<AlignMode, const char*> kAlignMode[] = {{AlignMode::Similarity, "similarity"},
                                                                   {AlignMode::Rigid, "rigid"}};

}  // namespace detail

// ---------------------------------------------------------------------------
// Skeleton
// ---------------------------------------------------------------------------

inline json to_json(const SkeletonSpec& s) {
  json pairs = json::array();
  for (auto [l, r] : s.flip_pairs) pairs.push_back({l, r});
  return {{"joint_names", s.joint_names}, {"pelvis_index", s.pelvis_index}, {"parent", s.parent},
          {"flip_pairs", pairs},          {"lsp14_subset", s.lsp14_subset}};
}

inline void update_from_json(const json& j, SkeletonSpec& s, const std::string& ctx = "skeleton") {
  detail::Fields f(j, ctx);
  f.get("joint_names", s.joint_names);
  f.get("pelvis_index", s.pelvis_index);
  f.get("parent", s.parent);
  f.get("flip_pairs", s.flip_pairs);
  f.get("lsp14_subset", s.lsp14_subset);
  f.finish();
  s.validate();
}

// ---------------------------------------------------------------------------
// Diffusion
// ---------------------------------------------------------------------------

inline json to_json(const SdeConfig& c) { return {{"beta_min", c.beta_min}, {"beta_max", c.beta_max}}; }

inline void update_from_json(const json& j, SdeConfig& c, const std::string& ctx = "sde") {
  detail::Fields f(j, ctx);
  f.get("beta_min", c.beta_min);
  f.get("beta_max", c.beta_max);
  f.finish();
  c.validate();
}

inline json to_json(const ModelDims& d) {
  return {{"joints", d.joints},
          {"hidden", d.hidden},
          {"depth", d.depth},
          {"time_features", d.time_features},
          {"pelvis_index", d.pelvis_index},
          {"fourier_scale", d.fourier_scale}};
}

inline void update_from_json(const json& j, ModelDims& d, const std::string& ctx = "model") {
  detail::Fields f(j, ctx);
  f.get("joints", d.joints);
  f.get("hidden", d.hidden);
  f.get("depth", d.depth);
  f.get("time_features", d.time_features);
  f.get("pelvis_index", d.pelvis_index);
  f.get("fourier_scale", d.fourier_scale);
  f.finish();
  d.validate();
}

inline json to_json(const TrainConfig& c) {
  return {{"epochs", c.epochs},
          {"batch_size", c.batch_size},
          {"learning_rate", c.learning_rate},
          {"warmup_iters", c.warmup_iters},
          {"seed", c.seed},
          {"flip", c.flip},
          {"rotate", c.rotate},
          {"rotation_axis", detail::vec3(c.rotation_axis)},
          {"min_time", c.min_time},
          {"focus_fraction", c.focus_fraction},
          {"focus_max_time", c.focus_max_time},
          {"smoothing", c.smoothing}};
}

inline void update_from_json(const json& j, TrainConfig& c, const std::string& ctx = "train") {
  detail::Fields f(j, ctx);
  f.get("epochs", c.epochs);
  f.get("batch_size", c.batch_size);
  f.get("learning_rate", c.learning_rate);
  f.get("warmup_iters", c.warmup_iters);
  f.get("seed", c.seed);
  f.get("flip", c.flip);
  f.get("rotate", c.rotate);
  f.get("rotation_axis", c.rotation_axis);
  f.get("min_time", c.min_time);
  f.get("focus_fraction", c.focus_fraction);
  f.get("focus_max_time", c.focus_max_time);
  f.get("smoothing", c.smoothing);
  f.finish();
  c.validate();
}

inline json to_json(const SampleOptions& o) { return {{"steps", o.steps}, {"end_time", o.end_time}}; }

inline void update_from_json(const json& j, SampleOptions& o, const std::string& ctx = "sample") {
  detail::Fields f(j, ctx);
  f.get("steps", o.steps);
  f.get("end_time", o.end_time);
  f.finish();
}

// ---------------------------------------------------------------------------
// Optimizer
// ---------------------------------------------------------------------------

inline json to_json(const ReverseOptions& r) {
  return {{"stochastic", r.stochastic},
          {"input", detail::enum_name(r.input, detail::kForwardInput)},
          {"integrator", detail::enum_name(r.integrator, detail::kIntegrator)}};
}

inline void update_from_json(const json& j, ReverseOptions& r, const std::string& ctx = "reverse") {
  detail::Fields f(j, ctx);
  f.get("stochastic", r.stochastic);
  f.with("input", [&](const json& v, const std::string& c) { r.input = detail::enum_from(v, c, detail::kForwardInput); });
  f.with("integrator",
         [&](const json& v, const std::string& c) { r.integrator = detail::enum_from(v, c, detail::kIntegrator); });
  f.finish();
}

inline json to_json(const OptimizerConfig& c) {
  return {{"total_iters", c.total_iters},
          {"warmup_iters", c.warmup_iters},
          {"t_max", c.t_max},
          {"t_sampling", detail::enum_name(c.t_sampling, detail::kTimeSampling)},
          {"bounds", {{"lo", detail::vec3(c.bounds.lo)}, {"hi", detail::vec3(c.bounds.hi)}}},
          {"rotation_grid", c.rotation_grid},
          {"rotation_axis", detail::vec3(c.rotation_axis)},
          {"refine_angle", c.refine_angle},
          {"denoise_steps", c.denoise_steps},
          {"reverse", to_json(c.reverse)},
          {"seed", c.seed}};
}

inline void update_from_json(const json& j, OptimizerConfig& c, const std::string& ctx = "optimizer") {
  detail::Fields f(j, ctx);
  f.get("total_iters", c.total_iters);
  f.get("warmup_iters", c.warmup_iters);
  f.get("t_max", c.t_max);
  f.with("t_sampling",
         [&](const json& v, const std::string& x) { c.t_sampling = detail::enum_from(v, x, detail::kTimeSampling); });
  f.with("bounds", [&](const json& v, const std::string& x) {
    detail::Fields b(v, x);
    b.get("lo", c.bounds.lo);
    b.get("hi", c.bounds.hi);
    b.finish();
  });
  f.get("rotation_grid", c.rotation_grid);
  f.get("rotation_axis", c.rotation_axis);
  f.get("refine_angle", c.refine_angle);
  f.get("denoise_steps", c.denoise_steps);
  f.with("reverse", [&](const json& v, const std::string& x) { update_from_json(v, c.reverse, x); });
  f.get("seed", c.seed);
  f.finish();
  c.validate();
}

// ---------------------------------------------------------------------------
// Anchors and metrics
// ---------------------------------------------------------------------------

inline json to_json(const KMeansOptions& o) { return {{"max_iters", o.max_iters}, {"tolerance", o.tolerance}}; }

inline void update_from_json(const json& j, KMeansOptions& o, const std::string& ctx = "kmeans") {
  detail::Fields f(j, ctx);
  f.get("max_iters", o.max_iters);
  f.get("tolerance", o.tolerance);
  f.finish();
}

inline json to_json(const MetricOptions& o) {
  return {{"pelvis_index", o.pelvis_index},
          {"root", detail::enum_name(o.root, detail::kRootAlignment)},
          {"procrustes", detail::enum_name(o.procrustes, detail::kAlignMode)},
          {"pck_threshold_mm", o.pck_threshold_mm},
          {"auc_grid_mm", o.resolved_auc_grid()}};
}

inline void update_from_json(const json& j, MetricOptions& o, const std::string& ctx = "metrics") {
  detail::Fields f(j, ctx);
  f.get("pelvis_index", o.pelvis_index);
  f.with("root", [&](const json& v, const std::string& x) { o.root = detail::enum_from(v, x, detail::kRootAlignment); });
  f.with("procrustes",
         [&](const json& v, const std::string& x) { o.procrustes = detail::enum_from(v, x, detail::kAlignMode); });
  f.get("pck_threshold_mm", o.pck_threshold_mm);
  f.get("auc_grid_mm", o.auc_grid_mm);
  f.finish();
}

// ---------------------------------------------------------------------------
// Synthetic data
// ---------------------------------------------------------------------------

inline json to_json(const AngleRange& r) { return json::array({r.lo, r.hi}); }

inline AngleRange angle_range_from(const json& j, const std::string& ctx) {
  if (!j.is_array() || j.size() != 2 || !j[0].is_number() || !j[1].is_number())
    throw ConfigError(ctx + ": expected [lo, hi]");
  return {j[0].get<double>(), j[1].get<double>()};
}

inline json to_json(const SyntheticConfig& c) {
  json dirs = json::array(), arts = json::array();
  for (const Vec3& d : c.rest_directions) dirs.push_back(detail::vec3(d));
  for (const Articulation& a : c.articulations)
    arts.push_back({{"joint", a.joint}, {"x", to_json(a.x)}, {"y", to_json(a.y)}, {"z", to_json(a.z)}});
  return {{"count", c.count},
          {"seed", c.seed},
          {"bone_lengths", c.bone_lengths},
          {"rest_directions", dirs},
          {"articulations", arts},
          {"fov_deg", to_json(c.fov_deg)},
          {"distance_m", to_json(c.distance_m)},
          {"height_m", to_json(c.height_m)},
          {"image_width", c.image_width},
          {"image_height", c.image_height},
          {"principal_jitter_px", c.principal_jitter_px},
          {"noise_sigma_px", c.noise_sigma_px}};
}

inline void update_from_json(const json& j, SyntheticConfig& c, const std::string& ctx = "synthetic") {
  detail::Fields f(j, ctx);
  f.get("count", c.count);
  f.get("seed", c.seed);
  f.get("bone_lengths", c.bone_lengths);
  f.with("rest_directions", [&](const json& v, const std::string& x) {
    if (!v.is_array()) throw ConfigError(x + ": expected an array");
    c.rest_directions.clear();
    for (const json& d : v) {
      if (!d.is_array() || d.size() != 3) throw ConfigError(x + ": expected [x, y, z] entries");
      c.rest_directions.emplace_back(d[0].get<double>(), d[1].get<double>(), d[2].get<double>());
    }
  });
  f.with("articulations", [&](const json& v, const std::string& x) {
    if (!v.is_array()) throw ConfigError(x + ": expected an array");
    c.articulations.clear();
    for (const json& a : v) {
      detail::Fields af(a, x + "[]");
      Articulation art;
      af.get("joint", art.joint);
      af.with("x", [&](const json& r, const std::string& rc) { art.x = angle_range_from(r, rc); });
      af.with("y", [&](const json& r, const std::string& rc) { art.y = angle_range_from(r, rc); });
      af.with("z", [&](const json& r, const std::string& rc) { art.z = angle_range_from(r, rc); });
      af.finish();
      c.articulations.push_back(art);
    }
  });
  f.with("fov_deg", [&](const json& v, const std::string& x) { c.fov_deg = angle_range_from(v, x); });
  f.with("distance_m", [&](const json& v, const std::string& x) { c.distance_m = angle_range_from(v, x); });
  f.with("height_m", [&](const json& v, const std::string& x) { c.height_m = angle_range_from(v, x); });
  f.get("image_width", c.image_width);
  f.get("image_height", c.image_height);
  f.get("principal_jitter_px", c.principal_jitter_px);
  f.get("noise_sigma_px", c.noise_sigma_px);
  f.finish();
}

// ---------------------------------------------------------------------------
// Camera sidecar: one {fx, fy, cx, cy} object, or an array with one per frame.
// ---------------------------------------------------------------------------

inline json to_json(const CameraIntrinsics& c) { return {{"fx", c.fx}, {"fy", c.fy}, {"cx", c.cx}, {"cy", c.cy}}; }

inline CameraIntrinsics camera_from_json(const json& j, const std::string& ctx = "camera") {
  CameraIntrinsics c;
  detail::Fields f(j, ctx);
  for (const char* k : {"fx", "fy", "cx", "cy"})
    if (!j.contains(k)) throw ConfigError(ctx + ": missing " + k);
  f.get("fx", c.fx);
  f.get("fy", c.fy);
  f.get("cx", c.cx);
  f.get("cy", c.cy);
  f.finish();
  c.validate();
  return c;
}

inline std::vector<CameraIntrinsics> cameras_from_json(const json& j) {
  if (j.is_object()) return {camera_from_json(j)};
  if (!j.is_array() || j.empty()) throw ConfigError("camera file must hold an object or a non-empty array");
  std::vector<CameraIntrinsics> out;
  for (std::size_t i = 0; i < j.size(); ++i) out.push_back(camera_from_json(j[i], "camera[" + std::to_string(i) + "]"));
  return out;
}

inline json cameras_to_json(const std::vector<CameraIntrinsics>& cams) {
  if (cams.size() == 1) return to_json(cams.front());
  json a = json::array();
  for (const CameraIntrinsics& c : cams) a.push_back(to_json(c));
  return a;
}

// ---------------------------------------------------------------------------
// Files
// ---------------------------------------------------------------------------

inline json read_json(const std::filesystem::path& path) {
  const std::string text = read_file(path);
  try {
    return json::parse(text);
  } catch (const json::parse_error& e) {
    throw ParseError(path.string() + ": " + e.what());
  }
}

inline void write_json(const std::filesystem::path& path, const json& j) { write_file_atomic(path, j.dump(2) + "\n"); }

inline std::vector<CameraIntrinsics> load_cameras(const std::filesystem::path& path) {
  return cameras_from_json(read_json(path));
}

}  // namespace zedo::io
