#pragma once

// Settings resolution (flag > config file > profile default), run manifests and
// JSONL record streams for the command-line tool.

#include "zedo/io/binary.hpp"
#include "zedo/io/json_config.hpp"

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#ifndef ZEDO_GIT_DESCRIBE
#define ZEDO_GIT_DESCRIBE "unknown"
#endif

namespace zedo::cli {

using io::json;

enum ExitCode : int { kOk = 0, kInternal = 1, kValidation = 2, kData = 3, kNumeric = 4, kInterrupted = 130 };

inline int exit_code_for(ErrorCategory c) {
  switch (c) {
    case ErrorCategory::Validation: return kValidation;
    case ErrorCategory::Data: return kData;
    case ErrorCategory::Numeric: return kNumeric;
  }
  return kInternal;
}

struct Settings {
  SkeletonSpec skeleton = SkeletonSpec::h36m17();
  SyntheticConfig synthetic = SyntheticConfig::h36m17_defaults();
  ModelDims model;
  SdeConfig sde;
  TrainConfig train;
  SampleOptions sample;
  OptimizerConfig optimizer;
  KMeansOptions kmeans;
  MetricOptions metrics;

  json to_json() const {
    return {{"skeleton", io::to_json(skeleton)}, {"synthetic", io::to_json(synthetic)},
            {"model", io::to_json(model)},       {"sde", io::to_json(sde)},
            {"train", io::to_json(train)},       {"sample", io::to_json(sample)},
            {"optimizer", io::to_json(optimizer)}, {"kmeans", io::to_json(kmeans)},
            {"metrics", io::to_json(metrics)}};
  }

  void update(const json& j) {
    io::detail::Fields f(j, "config");
    f.with("skeleton", [&](const json& v, const std::string& c) { io::update_from_json(v, skeleton, c); });
    f.with("synthetic", [&](const json& v, const std::string& c) { io::update_from_json(v, synthetic, c); });
    f.with("model", [&](const json& v, const std::string& c) { io::update_from_json(v, model, c); });
    f.with("sde", [&](const json& v, const std::string& c) { io::update_from_json(v, sde, c); });
    f.with("train", [&](const json& v, const std::string& c) { io::update_from_json(v, train, c); });
    f.with("sample", [&](const json& v, const std::string& c) { io::update_from_json(v, sample, c); });
    f.with("optimizer", [&](const json& v, const std::string& c) { io::update_from_json(v, optimizer, c); });
    f.with("kmeans", [&](const json& v, const std::string& c) { io::update_from_json(v, kmeans, c); });
    f.with("metrics", [&](const json& v, const std::string& c) { io::update_from_json(v, metrics, c); });
    f.finish();
  }

  void validate() const {
    skeleton.validate();
    synthetic.validate(skeleton);
    model.validate();
    sde.validate();
    train.validate();
    optimizer.validate();
    if (model.joints != skeleton.num_joints())
      throw ConfigError("model.joints (" + std::to_string(model.joints) + ") differs from skeleton joint count (" +
                        std::to_string(skeleton.num_joints()) + ")");
  }
};

/// "desk" runs on a laptop CPU in minutes. Its prior is trained only on small
/// diffusion times and the optimizer draws t from (0, 0.05]. "paper" records the
/// published training scale and is not expected to finish at desk scale.
inline Settings profile_settings(const std::string& name) {
  Settings s;
  if (name == "desk") {
    s.train.epochs = 300;
    s.train.batch_size = 256;
    s.train.learning_rate = 1e-3;
    s.train.warmup_iters = 200;
    s.train.focus_fraction = 1.0;
    s.train.rotate = false;
    s.optimizer.t_max = 0.05;
    return s;
  }
  if (name == "paper") {
    s.train.epochs = 5000;
    s.train.batch_size = 50000;
    s.train.learning_rate = 2e-4;
    s.train.warmup_iters = 5000;
    return s;
  }
  throw ConfigError("unknown profile '" + name + "' (expected desk or paper)");
}

inline void collect_leaf_paths(const json& j, const std::string& prefix, std::vector<std::string>& out) {
  if (j.is_object() && !j.empty()) {
    for (auto it = j.begin(); it != j.end(); ++it)
      collect_leaf_paths(it.value(), prefix.empty() ? it.key() : prefix + "." + it.key(), out);
  } else {
    out.push_back(prefix);
  }
}

/// Which layer supplied which setting, for the startup printout.
struct Provenance {
  std::string profile;
  std::string config_file;
  std::vector<std::string> from_file;
  std::vector<std::string> from_flags;

  void print(std::ostream& os, const Settings& s) const {
    os << "precedence: flags > " << (config_file.empty() ? "(no config file)" : config_file) << " > profile '"
       << profile << "'\n";
    for (const auto& k : from_flags) os << "  flag   " << k << "\n";
    for (const auto& k : from_file) os << "  file   " << k << "\n";
    os << "effective config: " << s.to_json().dump() << "\n";
  }
};

inline std::uint64_t fnv1a(std::string_view bytes) {
  std::uint64_t h = 1469598103934665603ULL;
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 1099511628211ULL;
  }
  return h;
}

inline std::string hex64(std::uint64_t v) {
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(v));
  return buf;
}

/// Record of one command invocation. Contains no timestamps, so reruns with equal
/// inputs and settings produce identical manifests exactly when outputs match.
class Manifest {
 public:
  Manifest(std::string command, const Settings& settings, std::uint64_t seed, int threads, std::string profile)
      : doc_{{"command", std::move(command)},
             {"git_describe", ZEDO_GIT_DESCRIBE},
             {"profile", std::move(profile)},
             {"seed", seed},
             {"threads", threads},
             {"config", settings.to_json()},
             {"inputs", json::array()},
             {"outputs", json::array()},
             {"status", "running"}} {}

  void add_input(const std::filesystem::path& p) { doc_["inputs"].push_back(describe(p)); }
  void add_output(const std::filesystem::path& p) { doc_["outputs"].push_back(describe(p)); }
  void set(const std::string& key, json value) { doc_[key] = std::move(value); }
  void write(const std::filesystem::path& dir, const std::string& status) {
    doc_["status"] = status;
    io::write_json(dir / "manifest.json", doc_);
  }

 private:
  static json describe(const std::filesystem::path& p) {
    const std::string bytes = io::read_file(p);
    return {{"path", p.filename().string()}, {"bytes", bytes.size()}, {"fnv1a64", hex64(fnv1a(bytes))}};
  }

  json doc_;
};

/// Newline-delimited JSON records, written atomically on close.
class JsonlWriter {
 public:
  explicit JsonlWriter(std::filesystem::path path) : path_(std::move(path)) {}
  void add(const json& record) { buf_ += record.dump() + "\n"; }
  void close() { io::write_file_atomic(path_, buf_); }
  const std::filesystem::path& path() const { return path_; }

 private:
  std::filesystem::path path_;
  std::string buf_;
};

}  // namespace zedo::cli
