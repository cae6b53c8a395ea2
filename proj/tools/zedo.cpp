// zedo: synthetic data, prior training, anchor selection, pose optimization,
// evaluation and iteration sweeps from the command line.

#include "cli_support.hpp"

#include "zedo/anchors.hpp"
#include "zedo/diffusion/training.hpp"
#include "zedo/io/checkpoint.hpp"
#include "zedo/io/csv.hpp"
#include "zedo/io/pose_file.hpp"
#include "zedo/io/synthetic.hpp"
#include "zedo/metrics.hpp"
#include "zedo/optimizer.hpp"
#include "zedo/parallel.hpp"

#include "CLI11.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <csignal>
#include <cstdio>
#include <iostream>
#include <limits>
#include <sstream>

namespace fs = std::filesystem;
using namespace zedo;
using zedo::cli::json;

namespace {

std::atomic<bool> g_stop{false};

extern "C" void on_sigint(int) { g_stop.store(true); }

struct CommonOptions {
  std::optional<std::uint64_t> seed;
  int threads = 1;
  std::string config;
  std::string out;
  std::string profile = "desk";
};

void add_common(CLI::App* app, CommonOptions& o) {
  app->add_option("--seed", o.seed, "Base random seed (overrides every seed in the config)");
  app->add_option("--threads", o.threads, "Worker threads")->check(CLI::PositiveNumber);
  app->add_option("--config", o.config, "JSON config file")->check(CLI::ExistingFile);
  app->add_option("--out", o.out, "Output directory")->required();
  app->add_option("--profile", o.profile, "Default profile: desk or paper");
}

struct Run {
  cli::Settings settings;
  cli::Provenance provenance;
  std::uint64_t seed = 0;
  fs::path out;
};

/// Applies profile, then config file, then flags. `flag_overrides` names the
/// settings changed by command-specific flags, applied by the caller through `apply`.
template <typename Apply>
Run resolve(const std::string& command, const CommonOptions& o, std::vector<std::string> flag_overrides,
            Apply&& apply) {
  Run r;
  r.settings = cli::profile_settings(o.profile);
  r.provenance.profile = o.profile;
  if (!o.config.empty()) {
    const json j = io::read_json(o.config);
    r.settings.update(j);
    r.provenance.config_file = o.config;
    cli::collect_leaf_paths(j, "", r.provenance.from_file);
  }
  if (o.seed) {
    r.settings.synthetic.seed = r.settings.train.seed = r.settings.optimizer.seed = *o.seed;
    flag_overrides.push_back("seed");
  }
  apply(r.settings);
  r.seed = o.seed.value_or(r.settings.optimizer.seed);
  r.provenance.from_flags = std::move(flag_overrides);
  r.settings.validate();
  r.out = o.out;
  fs::create_directories(r.out);
  std::cerr << "zedo " << command << " (" << ZEDO_GIT_DESCRIBE << ")\n";
  r.provenance.print(std::cerr, r.settings);
  return r;
}

double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

std::vector<Pose3D> load_relative(const fs::path& path, const SkeletonSpec& spec) {
  io::PoseFile f = io::read_poses(path, spec.num_joints());
  if (f.header.frame == Frame::PelvisRelative) return std::move(f.poses);
  std::vector<Pose3D> rel;
  rel.reserve(f.poses.size());
  for (const Pose3D& p : f.poses) rel.push_back(to_pelvis_relative(p, spec).pose);
  return rel;
}

json vec_json(const Vec3& v) { return json::array({v.x(), v.y(), v.z()}); }

// ---------------------------------------------------------------------------
// synth
// ---------------------------------------------------------------------------

int cmd_synth(const CommonOptions& o, std::optional<int> count, std::optional<double> noise) {
  std::vector<std::string> flags;
  if (count) flags.push_back("synthetic.count");
  if (noise) flags.push_back("synthetic.noise_sigma_px");
  Run r = resolve("synth", o, flags, [&](cli::Settings& s) {
    if (count) s.synthetic.count = *count;
    if (noise) s.synthetic.noise_sigma_px = *noise;
  });
  cli::Manifest m("synth", r.settings, r.seed, o.threads, o.profile);
  const SkeletonSpec& spec = r.settings.skeleton;

  const SyntheticDataset ds = generate_synthetic(r.settings.synthetic, spec);
  std::vector<Pose3D> rel;
  for (const Pose3D& p : ds.poses3d) rel.push_back(to_pelvis_relative(p, spec).pose);

  io::write_poses(r.out / "poses3d.zpse", ds.poses3d, Frame::CameraAbsolute, spec.hash(), spec.num_joints());
  io::write_poses(r.out / "poses3d_rel.zpse", rel, Frame::PelvisRelative, spec.hash(), spec.num_joints());
  io::write_csv_keypoints(r.out / "keypoints.csv", ds.poses2d);
  io::write_json(r.out / "cameras.json", io::cameras_to_json(ds.cameras));
  cli::JsonlWriter rec(r.out / "records.jsonl");
  for (const SyntheticRecord& x : ds.records)
    rec.add({{"index", x.index}, {"facing_deg", x.facing_deg}, {"distance_m", x.distance_m},
             {"height_m", x.height_m}, {"fov_deg", x.fov_deg}});
  rec.close();
  for (const char* f : {"poses3d.zpse", "poses3d_rel.zpse", "keypoints.csv", "cameras.json", "records.jsonl"})
    m.add_output(r.out / f);
  m.set("samples", ds.poses3d.size());
  m.write(r.out, "ok");
  std::cout << "wrote " << ds.poses3d.size() << " samples to " << r.out << "\n";
  return cli::kOk;
}

// ---------------------------------------------------------------------------
// train
// ---------------------------------------------------------------------------

int cmd_train(const CommonOptions& o, const std::string& data, std::optional<int> epochs) {
  std::vector<std::string> flags;
  if (epochs) flags.push_back("train.epochs");
  Run r = resolve("train", o, flags, [&](cli::Settings& s) {
    if (epochs) s.train.epochs = *epochs;
  });
  cli::Manifest m("train", r.settings, r.seed, o.threads, o.profile);
  m.add_input(data);
  const std::vector<Pose3D> rel = load_relative(data, r.settings.skeleton);

  cli::JsonlWriter log(r.out / "train_log.jsonl");
  TrainHooks hooks;
  hooks.stop = &g_stop;
  hooks.on_step = [&](const TrainLogRecord& rec) {
    log.add({{"step", rec.step}, {"epoch", rec.epoch}, {"loss", rec.loss}, {"smoothed_loss", rec.smoothed_loss},
             {"learning_rate", rec.learning_rate}});
    if (rec.step % 500 == 0)
      std::cerr << "step " << rec.step << " epoch " << rec.epoch << " loss " << rec.smoothed_loss << "\n";
  };
  std::signal(SIGINT, on_sigint);
  const auto t0 = std::chrono::steady_clock::now();
  TrainResult<float> res = train<float>(rel, r.settings.skeleton, r.settings.model, r.settings.sde, r.settings.train, hooks);
  std::signal(SIGINT, SIG_DFL);

  io::save_checkpoint(r.out / "model.zckp", res.model);
  log.close();
  m.add_output(r.out / "model.zckp");
  m.add_output(log.path());
  m.set("steps", res.log.size());
  m.set("initial_loss", res.initial_loss());
  m.set("final_smoothed_loss", res.final_smoothed_loss());
  m.write(r.out, res.interrupted ? "interrupted" : "ok");
  std::cout << (res.interrupted ? "interrupted" : "trained") << " after " << res.log.size() << " steps in "
            << seconds_since(t0) << " s; loss " << res.initial_loss() << " -> " << res.final_smoothed_loss() << "\n";
  return res.interrupted ? cli::kInterrupted : cli::kOk;
}

// ---------------------------------------------------------------------------
// anchors
// ---------------------------------------------------------------------------

int cmd_anchors(const CommonOptions& o, const std::string& data, int count, const std::string& method,
                const std::string& checkpoint) {
  Run r = resolve("anchors", o, {}, [](cli::Settings&) {});
  cli::Manifest m("anchors", r.settings, r.seed, o.threads, o.profile);
  const SkeletonSpec& spec = r.settings.skeleton;
  AnchorSet set;
  if (method == "random_generate") {
    if (checkpoint.empty()) throw ConfigError("random_generate needs --checkpoint");
    m.add_input(checkpoint);
    const ScoreModelF model = io::load_checkpoint<float>(checkpoint, r.settings.model);
    set = random_generate_anchors(model, count, r.seed, r.settings.sample);
  } else {
    if (data.empty()) throw ConfigError(method + " needs --data");
    m.add_input(data);
    const std::vector<Pose3D> rel = load_relative(data, spec);
    if (method == "kmeans")
      set = kmeans_anchors(rel, count, r.seed, r.settings.kmeans);
    else if (method == "random_sample")
      set = random_sample_anchors(rel, count, r.seed);
    else
      throw ConfigError("unknown anchor method '" + method + "'");
  }
  io::write_poses(r.out / "anchors.zpse", set.poses, Frame::PelvisRelative, spec.hash(), spec.num_joints());
  io::write_json(r.out / "anchors.json", {{"source", to_string(set.source)},
                                          {"indices", set.indices},
                                          {"dataset_hash", cli::hex64(set.dataset_hash)},
                                          {"seed", set.seed},
                                          {"sse_log", set.sse_log}});
  m.add_output(r.out / "anchors.zpse");
  m.add_output(r.out / "anchors.json");
  m.write(r.out, "ok");
  std::cout << "selected " << set.size() << " anchors (" << to_string(set.source) << ")\n";
  return cli::kOk;
}

// ---------------------------------------------------------------------------
// optimize / sweep
// ---------------------------------------------------------------------------

struct OptimizeInputs {
  std::vector<Pose2D> keypoints;
  std::vector<CameraIntrinsics> cameras;
  ScoreModelF model;
  std::vector<Hypothesis> anchors;

  const CameraIntrinsics& camera(std::size_t frame) const { return cameras.size() == 1 ? cameras[0] : cameras[frame]; }
};

OptimizeInputs load_optimize_inputs(const Run& r, cli::Manifest& m, const std::string& keypoints,
                                    const std::string& cameras, const std::string& checkpoint,
                                    const std::string& anchors) {
  const SkeletonSpec& spec = r.settings.skeleton;
  OptimizeInputs in;
  io::CsvKeypoints csv = io::load_csv_keypoints(keypoints, spec.num_joints());
  for (const auto& w : csv.warnings) std::cerr << "warning: " << keypoints << ": " << w << "\n";
  in.keypoints = std::move(csv.frames);
  in.cameras = io::load_cameras(cameras);
  if (in.cameras.size() != 1 && in.cameras.size() != in.keypoints.size())
    throw JointCountMismatch("camera file has " + std::to_string(in.cameras.size()) + " entries for " +
                             std::to_string(in.keypoints.size()) + " frames");
  in.model = io::load_checkpoint<float>(checkpoint, r.settings.model);
  const io::PoseFile a = io::read_poses(anchors, spec.num_joints());
  for (std::size_t k = 0; k < a.poses.size(); ++k)
    in.anchors.push_back({to_pelvis_relative(a.poses[k], spec).pose, static_cast<int>(k)});
  for (const auto& p : {keypoints, cameras, checkpoint, anchors}) m.add_input(p);
  return in;
}

/// Outcome per frame and hypothesis, frames in parallel.
std::vector<std::vector<HypothesisOutcome>> optimize_all(const OptimizeInputs& in, const OptimizerConfig& cfg,
                                                         int threads) {
  std::vector<std::vector<HypothesisOutcome>> out(in.keypoints.size());
  parallel_for(static_cast<int>(in.keypoints.size()), threads, [&](int f) {
    out[f] = run_multi_hypothesis(in.anchors, in.keypoints[f], in.camera(f), in.model, cfg, 1);
  });
  return out;
}

json trace_json(int frame, const HypothesisOutcome& h, bool per_iteration) {
  json rec{{"frame", frame}, {"hypothesis", h.id}, {"ok", h.ok()}};
  const OptimizationTrace& t = h.ok() ? h.result->trace : h.failed_trace;
  if (!h.ok()) rec["error"] = h.error;
  rec["initial_angle_rad"] = t.initial.angle;
  rec["initial_error_px"] = t.initial.error_px;
  rec["iterations"] = t.iterations();
  if (h.ok()) {
    rec["final_translation"] = vec_json(t.final_translation);
    rec["final_reprojection_px"] = t.reprojection_error_px.empty() ? 0.0 : t.reprojection_error_px.back();
  }
  if (per_iteration) {
    json tr = json::array();
    for (const Vec3& v : t.translation) tr.push_back(vec_json(v));
    rec["translation"] = tr;
    rec["projection_error_px"] = t.projection_error_px;
    rec["reprojection_error_px"] = t.reprojection_error_px;
    rec["denoise_time"] = t.denoise_time;
    rec["behind_camera"] = t.behind_camera;
  }
  return rec;
}

/// Frame-major list of camera-frame poses; failed hypotheses are stored as NaN.
std::vector<Pose3D> collect_poses(const std::vector<std::vector<HypothesisOutcome>>& res, int joints) {
  std::vector<Pose3D> poses;
  for (const auto& frame : res)
    for (const HypothesisOutcome& h : frame)
      poses.push_back(h.ok() ? h.result->pose
                             : Pose3D(Joints3::Constant(joints, 3, std::numeric_limits<double>::quiet_NaN()),
                                      Frame::CameraAbsolute));
  return poses;
}

int cmd_optimize(const CommonOptions& o, const std::string& keypoints, const std::string& cameras,
                 const std::string& checkpoint, const std::string& anchors, std::optional<int> iters,
                 bool per_iteration) {
  std::vector<std::string> flags;
  if (iters) flags.push_back("optimizer.total_iters");
  Run r = resolve("optimize", o, flags, [&](cli::Settings& s) {
    if (iters) s.optimizer.total_iters = *iters;
  });
  cli::Manifest m("optimize", r.settings, r.seed, o.threads, o.profile);
  const OptimizeInputs in = load_optimize_inputs(r, m, keypoints, cameras, checkpoint, anchors);
  OptimizerConfig cfg = r.settings.optimizer;
  cfg.seed = r.seed;

  const auto t0 = std::chrono::steady_clock::now();
  const auto res = optimize_all(in, cfg, o.threads);
  const double secs = seconds_since(t0);

  const SkeletonSpec& spec = r.settings.skeleton;
  io::write_poses(r.out / "poses.zpse", collect_poses(res, spec.num_joints()), Frame::CameraAbsolute, spec.hash(),
                  spec.num_joints());
  cli::JsonlWriter traces(r.out / "traces.jsonl");
  int failed = 0;
  for (std::size_t f = 0; f < res.size(); ++f)
    for (const HypothesisOutcome& h : res[f]) {
      failed += h.ok() ? 0 : 1;
      traces.add(trace_json(static_cast<int>(f), h, per_iteration));
    }
  traces.close();
  m.add_output(r.out / "poses.zpse");
  m.add_output(traces.path());
  m.set("frames", res.size());
  m.set("hypotheses", in.anchors.size());
  m.set("failed_hypotheses", failed);
  m.write(r.out, "ok");
  std::cout << "optimized " << res.size() << " frames x " << in.anchors.size() << " hypotheses in " << secs << " s ("
            << failed << " failed)\n";
  return cli::kOk;
}

// ---------------------------------------------------------------------------
// eval
// ---------------------------------------------------------------------------

struct EvalSetup {
  std::vector<std::vector<Pose3D>> hyps;
  std::vector<Pose3D> gt;
};

/// Groups frame-major predictions, dropping failed (non-finite) hypotheses. With
/// `lsp14`, poses are pelvis-aligned on all joints and then reduced to the subset.
EvalSetup prepare_eval(const std::vector<Pose3D>& pred, const std::vector<Pose3D>& gt, int hypotheses,
                       const SkeletonSpec& spec, bool lsp14, MetricOptions& opt) {
  if (hypotheses < 1) throw ConfigError("hypotheses must be >= 1");
  if (pred.size() != gt.size() * static_cast<std::size_t>(hypotheses))
    throw JointCountMismatch(std::to_string(pred.size()) + " predictions for " + std::to_string(gt.size()) +
                             " frames x " + std::to_string(hypotheses) + " hypotheses");
  EvalSetup s;
  for (std::size_t f = 0; f < gt.size(); ++f) {
    std::vector<Pose3D> h;
    for (int k = 0; k < hypotheses; ++k) {
      Pose3D p = pred[f * hypotheses + k];
      if (!p.all_finite()) continue;
      if (lsp14) {
        p.joints.rowwise() += gt[f].joints.row(opt.pelvis_index) - p.joints.row(opt.pelvis_index);
        p = select_lsp14(p, spec);
      }
      h.push_back(std::move(p));
    }
    if (h.empty()) throw NonFinitePose("every hypothesis of frame " + std::to_string(f) + " failed");
    s.hyps.push_back(std::move(h));
    s.gt.push_back(lsp14 ? select_lsp14(gt[f], spec) : gt[f]);
  }
  if (lsp14) opt.root = RootAlignment::Absolute;
  return s;
}

json report_json(const EvalReport& rep) {
  return {{"dataset", rep.dataset},         {"hypotheses", rep.hypotheses},     {"joints", rep.joints},
          {"mpjpe_mm", rep.mean_mpjpe_mm},  {"pa_mpjpe_mm", rep.mean_pa_mpjpe_mm},
          {"pck", rep.mean_pck},            {"auc", rep.mean_auc},             {"samples", rep.samples.size()}};
}

int cmd_eval(const CommonOptions& o, const std::string& pred_path, const std::string& gt_path, int hypotheses,
             bool lsp14, const std::string& dataset) {
  Run r = resolve("eval", o, {}, [](cli::Settings&) {});
  cli::Manifest m("eval", r.settings, r.seed, o.threads, o.profile);
  m.add_input(pred_path);
  m.add_input(gt_path);
  const SkeletonSpec& spec = r.settings.skeleton;
  const io::PoseFile pred = io::read_poses(pred_path, spec.num_joints());
  const io::PoseFile gt = io::read_poses(gt_path, spec.num_joints());
  MetricOptions opt = r.settings.metrics;
  const EvalSetup s = prepare_eval(pred.poses, gt.poses, hypotheses, spec, lsp14, opt);
  EvalReport rep = evaluate(s.hyps, s.gt, opt);
  rep.dataset = dataset;
  rep.hypotheses = hypotheses;
  rep.seed = r.seed;

  cli::JsonlWriter per(r.out / "eval_samples.jsonl");
  for (const SampleMetrics& x : rep.samples)
    per.add({{"index", x.index}, {"hypotheses", x.hypotheses}, {"best_hypothesis", x.best_hypothesis},
             {"mpjpe_mm", x.mpjpe_mm}, {"pa_mpjpe_mm", x.pa_mpjpe_mm}, {"pck", x.pck}, {"auc", x.auc}});
  per.close();
  io::write_json(r.out / "report.json", report_json(rep));
  m.add_output(per.path());
  m.add_output(r.out / "report.json");
  m.write(r.out, "ok");
  std::cout << format_table(rep);
  return cli::kOk;
}

int cmd_sweep(const CommonOptions& o, const std::string& keypoints, const std::string& cameras,
              const std::string& checkpoint, const std::string& anchors, const std::string& gt_path,
              std::vector<int> iters) {
  Run r = resolve("sweep", o, {}, [](cli::Settings&) {});
  cli::Manifest m("sweep", r.settings, r.seed, o.threads, o.profile);
  const OptimizeInputs in = load_optimize_inputs(r, m, keypoints, cameras, checkpoint, anchors);
  m.add_input(gt_path);
  const SkeletonSpec& spec = r.settings.skeleton;
  const io::PoseFile gt = io::read_poses(gt_path, spec.num_joints());
  if (gt.poses.size() != in.keypoints.size()) throw JointCountMismatch("ground truth and keypoint frame counts differ");

  cli::JsonlWriter out(r.out / "sweep.jsonl");
  for (int n : iters) {
    OptimizerConfig cfg = r.settings.optimizer;
    cfg.seed = r.seed;
    cfg.total_iters = n;
    // Warmup keeps its share of the default schedule.
    cfg.warmup_iters = n * r.settings.optimizer.warmup_iters / r.settings.optimizer.total_iters;
    const auto t0 = std::chrono::steady_clock::now();
    const auto res = optimize_all(in, cfg, o.threads);
    const double secs = seconds_since(t0);
    MetricOptions opt = r.settings.metrics;
    const EvalSetup s =
        prepare_eval(collect_poses(res, spec.num_joints()), gt.poses, static_cast<int>(in.anchors.size()), spec, false, opt);
    const EvalReport rep = evaluate(s.hyps, s.gt, opt);
    std::vector<double> e;
    for (const SampleMetrics& x : rep.samples) e.push_back(x.mpjpe_mm);
    std::nth_element(e.begin(), e.begin() + e.size() / 2, e.end());
    out.add({{"iterations", n}, {"warmup_iters", cfg.warmup_iters}, {"mean_mpjpe_mm", rep.mean_mpjpe_mm},
             {"median_mpjpe_mm", e[e.size() / 2]}, {"seconds", secs}});
    std::cout << "n=" << n << " mpjpe " << rep.mean_mpjpe_mm << " mm, " << secs << " s\n";
  }
  out.close();
  m.add_output(out.path());
  m.write(r.out, "ok");
  return cli::kOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Zero-shot 3D human pose estimation by optimization with a diffusion pose prior"};
  app.require_subcommand(1);

  CommonOptions common;
  std::optional<int> count, epochs, iters;
  std::optional<double> noise;
  std::string data, checkpoint, keypoints, cameras, anchors, pred, gt, method = "kmeans", dataset = "synthetic";
  int anchor_count = 1, hypotheses = 1;
  bool lsp14 = false, summary_traces = false;
  std::vector<int> sweep_iters{100, 250, 500, 1000, 1500, 2000};

  CLI::App* synth = app.add_subcommand("synth", "Generate a synthetic 2D/3D/camera dataset");
  add_common(synth, common);
  synth->add_option("--count", count, "Number of samples");
  synth->add_option("--noise", noise, "2D noise sigma in pixels");

  CLI::App* trn = app.add_subcommand("train", "Train the score-based pose prior");
  add_common(trn, common);
  trn->add_option("--data", data, "ZPSE training poses")->required()->check(CLI::ExistingFile);
  trn->add_option("--epochs", epochs, "Training epochs");

  CLI::App* anc = app.add_subcommand("anchors", "Select initial poses");
  add_common(anc, common);
  anc->add_option("--data", data, "ZPSE pose set")->check(CLI::ExistingFile);
  anc->add_option("--count", anchor_count, "Number of anchors S")->check(CLI::PositiveNumber);
  anc->add_option("--method", method, "kmeans, random_sample or random_generate");
  anc->add_option("--checkpoint", checkpoint, "Model for random_generate")->check(CLI::ExistingFile);

  auto add_opt_inputs = [&](CLI::App* c) {
    c->add_option("--keypoints", keypoints, "2D keypoint CSV")->required()->check(CLI::ExistingFile);
    c->add_option("--cameras", cameras, "Camera JSON sidecar")->required()->check(CLI::ExistingFile);
    c->add_option("--checkpoint", checkpoint, "Model checkpoint")->required()->check(CLI::ExistingFile);
    c->add_option("--anchors", anchors, "ZPSE anchors")->required()->check(CLI::ExistingFile);
  };
  CLI::App* opt = app.add_subcommand("optimize", "Estimate 3D poses from 2D keypoints");
  add_common(opt, common);
  add_opt_inputs(opt);
  opt->add_option("--iters", iters, "Total iterations");
  opt->add_flag("--summary-traces", summary_traces, "Omit per-iteration arrays from traces");

  CLI::App* ev = app.add_subcommand("eval", "Score predictions against ground truth");
  add_common(ev, common);
  ev->add_option("--pred", pred, "ZPSE predictions (frame-major, S per frame)")->required()->check(CLI::ExistingFile);
  ev->add_option("--gt", gt, "ZPSE ground truth")->required()->check(CLI::ExistingFile);
  ev->add_option("--hypotheses", hypotheses, "Hypotheses per frame S")->check(CLI::PositiveNumber);
  ev->add_flag("--lsp14", lsp14, "Evaluate on the 14-joint subset");
  ev->add_option("--dataset", dataset, "Dataset label for the table");

  CLI::App* sw = app.add_subcommand("sweep", "MPJPE and time against iteration count");
  add_common(sw, common);
  add_opt_inputs(sw);
  sw->add_option("--gt", gt, "ZPSE ground truth")->required()->check(CLI::ExistingFile);
  sw->add_option("--iters", sweep_iters, "Iteration counts")->delimiter(',');

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? cli::kOk : cli::kValidation;
  }

  try {
    if (*synth) return cmd_synth(common, count, noise);
    if (*trn) return cmd_train(common, data, epochs);
    if (*anc) return cmd_anchors(common, data, anchor_count, method, checkpoint);
    if (*opt) return cmd_optimize(common, keypoints, cameras, checkpoint, anchors, iters, !summary_traces);
    if (*ev) return cmd_eval(common, pred, gt, hypotheses, lsp14, dataset);
    if (*sw) return cmd_sweep(common, keypoints, cameras, checkpoint, anchors, gt, sweep_iters);
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return cli::exit_code_for(e.category());
  } catch (const std::exception& e) {
    std::cerr << "internal error: " << e.what() << "\n";
    return cli::kInternal;
  }
  return cli::kInternal;
}
