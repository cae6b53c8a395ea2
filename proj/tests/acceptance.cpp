// End-to-end acceptance checks. Prints one PASS/FAIL line per criterion and exits
// nonzero if any fails.

#include "cli_support.hpp"
#include "translation_oracle.hpp"
#include "zedo/anchors.hpp"
#include "zedo/diffusion/training.hpp"
#include "zedo/io/checkpoint.hpp"
#include "zedo/io/csv.hpp"
#include "zedo/io/json_config.hpp"
#include "zedo/io/pose_file.hpp"
#include "zedo/io/synthetic.hpp"
#include "zedo/metrics.hpp"
#include "zedo/optimizer.hpp"
#include "zedo/parallel.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <iostream>
#include <optional>
#include <random>
#include <sstream>
#include <thread>

using namespace zedo;

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) { return std::chrono::duration<double>(Clock::now() - t0).count(); }

double median(std::vector<double> v) {
  std::sort(v.begin(), v.end());
  const std::size_t n = v.size();
  return n % 2 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
}

double mean(const std::vector<double>& v) {
  double s = 0.0;
  for (double x : v) s += x;
  return s / static_cast<double>(v.size());
}

std::string fmt(const char* f, auto... args) {
  char buf[512];
  std::snprintf(buf, sizeof buf, f, args...);
  return buf;
}

struct Outcome {
  bool pass = false;
  std::string detail;
};

int threads() { return static_cast<int>(std::max(1u, std::thread::hardware_concurrency())); }

// ---------------------------------------------------------------------------
// Shared desk-scale experiment
// ---------------------------------------------------------------------------

struct Experiment {
  SkeletonSpec spec = SkeletonSpec::h36m17();
  cli::Settings desk = cli::profile_settings("desk");
  std::vector<Pose3D> train_rel;
  SyntheticDataset test;
  std::optional<ScoreModelF> model;
  double train_seconds = 0.0;

  Experiment() {
    SyntheticConfig tc = desk.synthetic;
    tc.count = 10000;
    tc.seed = 0;
    for (const Pose3D& p : generate_synthetic(tc, spec).poses3d) train_rel.push_back(to_pelvis_relative(p, spec).pose);
    SyntheticConfig vc = desk.synthetic;
    vc.count = 100;
    vc.seed = 2024;
    vc.noise_sigma_px = 0.0;
    test = generate_synthetic(vc, spec);
  }

  const ScoreModelF& trained() {
    if (!model) {
      const auto t0 = Clock::now();
      TrainResult<float> r = train<float>(train_rel, spec, desk.model, desk.sde, desk.train);
      train_seconds = seconds_since(t0);
      std::cout << fmt("  trained %zu steps in %.1f s, loss %.3f -> %.3f\n", r.log.size(), train_seconds,
                       r.initial_loss(), r.final_smoothed_loss())
                << std::flush;
      model.emplace(std::move(r.model));
    }
    return *model;
  }

  static std::vector<Hypothesis> hypotheses(const AnchorSet& a) {
    std::vector<Hypothesis> h;
    for (int k = 0; k < a.size(); ++k) h.push_back({a.poses[k], k});
    return h;
  }

  /// Per-frame MPJPE (mm) of the best hypothesis; frames where every hypothesis
  /// failed count as infinite error.
  std::vector<double> errors(const std::vector<Hypothesis>& hyps, const OptimizerConfig& cfg) {
    const ScoreModelF& m = trained();
    const int n = static_cast<int>(test.poses2d.size());
    std::vector<double> e(n, std::numeric_limits<double>::infinity());
    parallel_for(n, threads(), [&](int f) {
      for (const HypothesisOutcome& h : run_multi_hypothesis(hyps, test.poses2d[f], test.cameras[f], m, cfg, 1))
        if (h.ok()) e[f] = std::min(e[f], mpjpe(h.result->pose, test.poses3d[f]));
    });
    return e;
  }
};

Experiment& experiment() {
  static Experiment e;
  return e;
}

// ---------------------------------------------------------------------------
// 1. Loss gradients
// ---------------------------------------------------------------------------

Outcome dsm_gradients() {
  const auto t0 = Clock::now();
  ModelDims dims;
  dims.joints = 4;
  dims.hidden = 8;
  dims.depth = 2;
  dims.time_features = 8;
  const SdeConfig sde;
  const int batch = 3;
  const double h = 1e-5;
  double worst = 0.0;
  std::size_t checked = 0;
  for (int draw = 0; draw < 100; ++draw) {
    ScoreModelD model(dims, sde, 1000 + draw);
    std::mt19937_64 rng(draw);
    std::normal_distribution<double> nd(0.0, 1.0);
    // Generic parameters so that no gradient block is identically zero.
    for (double& p : model.params()) p = 0.4 * nd(rng);
    ScoreModelD::Mat clean(dims.input_dim(), batch), noise(dims.input_dim(), batch);
    for (Eigen::Index i = 0; i < clean.size(); ++i) clean.data()[i] = 0.3 * nd(rng), noise.data()[i] = nd(rng);
    std::uniform_real_distribution<double> ut(1e-3, 1.0);
    std::vector<double> times(batch);
    for (double& t : times) t = ut(rng);

    const auto grad = dsm_loss(model, clean, times, noise).grad;
    for (std::size_t k = 0; k < model.param_count(); ++k) {
      double& p = model.params()[k];
      const double keep = p;
      p = keep + h;
      const double up = dsm_loss(model, clean, times, noise).loss;
      p = keep - h;
      const double down = dsm_loss(model, clean, times, noise).loss;
      p = keep;
      const double fd = (up - down) / (2.0 * h);
      const double rel = std::abs(grad[k] - fd) / std::max({std::abs(grad[k]), std::abs(fd), 1e-5});
      worst = std::max(worst, rel);
      ++checked;
    }
  }
  const double secs = seconds_since(t0);
  return {worst <= 1e-3 && secs < 30.0,
          fmt("max relative error %.2e over %zu parameters in 100 draws (%.1f s)", worst, checked, secs)};
}

// ---------------------------------------------------------------------------
// 2. Forward perturbation moments
// ---------------------------------------------------------------------------

Outcome perturb_moments() {
  const auto t0 = Clock::now();
  const SdeConfig sde;
  const int n = 100000;
  Eigen::VectorXd x0(3);
  x0 << 0.8, -0.35, 1.7;
  std::mt19937_64 rng(77);
  std::normal_distribution<double> nd(0.0, 1.0);
  double worst_z = 0.0;
  for (double t : {0.1, 0.5, 1.0}) {
    // Independent closed form: B(t) = 0.1 t + 9.95 t^2.
    const double b = 0.1 * t + 0.5 * 19.9 * t * t;
    const double m = std::exp(-0.5 * b), s = 1.0 - std::exp(-b);
    Eigen::VectorXd sum = Eigen::VectorXd::Zero(3), sq = Eigen::VectorXd::Zero(3);
    Eigen::VectorXd z(3);
    for (int i = 0; i < n; ++i) {
      for (int d = 0; d < 3; ++d) z[d] = nd(rng);
      const Eigen::VectorXd x = perturb(sde, x0, t, z);
      sum += x;
      sq += x.cwiseProduct(x);
    }
    for (int d = 0; d < 3; ++d) {
      const double mu = sum[d] / n;
      const double var = (sq[d] - n * mu * mu) / (n - 1);
      worst_z = std::max(worst_z, std::abs(mu - m * x0[d]) / (s / std::sqrt(n)));
      worst_z = std::max(worst_z, std::abs(var - s * s) / (s * s * std::sqrt(2.0 / (n - 1))));
    }
  }
  const double secs = seconds_since(t0);
  return {worst_z <= 3.0 && secs < 10.0, fmt("largest deviation %.2f standard errors (%.2f s)", worst_z, secs)};
}

// ---------------------------------------------------------------------------
// 3. Translation solve
// ---------------------------------------------------------------------------

Outcome translation_solve() {
  const auto t0 = Clock::now();
  const SkeletonSpec spec = SkeletonSpec::h36m17();
  SyntheticConfig cfg = SyntheticConfig::h36m17_defaults();
  cfg.count = 20;
  cfg.seed = 31;
  const SyntheticDataset ds = generate_synthetic(cfg, spec);
  const TranslationBounds bounds;
  std::mt19937_64 rng(5);
  std::uniform_real_distribution<double> conf(0.3, 1.0), uxy(-1.0, 1.0), uz(3.0, 9.0);
  double oracle_gap = 0.0, planted_gap = 0.0;
  for (int i = 0; i < 20; ++i) {
    const Pose3D rel = to_pelvis_relative(ds.poses3d[i], spec).pose;
    Pose2D p2d = ds.poses2d[i];
    for (int j = 0; j < p2d.num_joints(); ++j) p2d.confidence[j] = conf(rng);
    const Vec3 oracle = test::grid_refine_translation(rel, p2d, ds.cameras[i], bounds, 30);
    oracle_gap = std::max(oracle_gap, (solve_translation(rel, p2d, ds.cameras[i], bounds) - oracle).norm());

    const Vec3 planted(uxy(rng), uxy(rng), uz(rng));
    const Pose2D rendered(project(from_pelvis_relative(rel, planted), ds.cameras[i]).pixels, p2d.confidence);
    planted_gap = std::max(planted_gap, (solve_translation(rel, rendered, ds.cameras[i], bounds) - planted).norm());
  }
  const double secs = seconds_since(t0);
  return {oracle_gap <= 1e-3 && planted_gap <= 1e-9 && secs < 30.0,
          fmt("max gap to pixel oracle %.2e m, to planted translation %.2e m (%.1f s)", oracle_gap, planted_gap, secs)};
}

// ---------------------------------------------------------------------------
// 4 and 5. Trace invariants of the optimization loop
// ---------------------------------------------------------------------------

std::vector<OptimizationTrace> sample_traces() {
  Experiment& ex = experiment();
  const AnchorSet a = kmeans_anchors(ex.train_rel, 1, 0);
  std::vector<OptimizationTrace> out;
  for (int f = 0; f < 5; ++f)
    out.push_back(run_zedo(Hypothesis{a.poses[0], 0}, ex.test.poses2d[f], ex.test.cameras[f], ex.trained(),
                           ex.desk.optimizer)
                      .trace);
  return out;
}

Outcome projection_exactness(const std::vector<OptimizationTrace>& traces) {
  double worst = 0.0;
  std::size_t steps = 0;
  for (const OptimizationTrace& t : traces) {
    for (double e : t.projection_error_px) worst = std::max(worst, e);
    steps += t.projection_error_px.size();
  }
  return {worst <= 1e-6 && steps == traces.size() * 1000,
          fmt("max post-projection error %.2e px over %zu iterations", worst, steps)};
}

Outcome loop_structure(const std::vector<OptimizationTrace>& traces, const OptimizerConfig& cfg) {
  bool iters_ok = true, warm_ok = true, pelvis_ok = true, moves = false;
  for (const OptimizationTrace& t : traces) {
    iters_ok = iters_ok && t.iterations() == 1000 && t.denoised_pelvis_abs.size() == 1000;
    for (int i = 1; i < cfg.warmup_iters; ++i) warm_ok = warm_ok && t.translation[i] == t.translation[0];
    for (double p : t.denoised_pelvis_abs) pelvis_ok = pelvis_ok && p == 0.0;
    moves = moves || t.translation[cfg.warmup_iters] != t.translation[0];
  }
  return {iters_ok && warm_ok && pelvis_ok && cfg.total_iters == 1000 && cfg.warmup_iters == 200,
          fmt("1000 iterations: %s; translation fixed for first 200: %s (moves afterwards: %s); pelvis row zero: %s",
              iters_ok ? "yes" : "no", warm_ok ? "yes" : "no", moves ? "yes" : "no", pelvis_ok ? "yes" : "no")};
}

// ---------------------------------------------------------------------------
// 6 to 9. Accuracy at desk scale
// ---------------------------------------------------------------------------

std::vector<double> g_single;

Outcome desk_accuracy() {
  Experiment& ex = experiment();
  const auto t0 = Clock::now();
  ex.trained();
  const std::vector<double> e1 = ex.errors(Experiment::hypotheses(kmeans_anchors(ex.train_rel, 1, 0)), ex.desk.optimizer);
  const std::vector<double> e10 =
      ex.errors(Experiment::hypotheses(kmeans_anchors(ex.train_rel, 10, 0)), ex.desk.optimizer);
  const double secs = seconds_since(t0);
  g_single = e1;
  const double m1 = median(e1), m10 = median(e10);
  return {m1 <= 80.0 && m10 <= 50.0 && m10 < m1 && secs < 900.0,
          fmt("median MPJPE S=1 %.1f mm, S=10 %.1f mm on 100 held-out frames; train %.0f s, total %.0f s", m1, m10,
              ex.train_seconds, secs)};
}

Outcome prior_helps() {
  Experiment& ex = experiment();
  OptimizerConfig cfg = ex.desk.optimizer;
  cfg.denoise_steps = 0;
  const std::vector<double> e0 = ex.errors(Experiment::hypotheses(kmeans_anchors(ex.train_rel, 1, 0)), cfg);
  const double with = median(g_single), without = median(e0);
  return {with < without, fmt("median MPJPE with denoising %.1f mm, without %.1f mm", with, without)};
}

Outcome kmeans_vs_random() {
  Experiment& ex = experiment();
  std::vector<double> km, rs;
  for (std::uint64_t seed = 0; seed < 5; ++seed) {
    OptimizerConfig cfg = ex.desk.optimizer;
    cfg.seed = seed;
    km.push_back(mean(ex.errors(Experiment::hypotheses(kmeans_anchors(ex.train_rel, 1, seed)), cfg)));
    rs.push_back(mean(ex.errors(Experiment::hypotheses(random_sample_anchors(ex.train_rel, 1, seed)), cfg)));
  }
  return {mean(km) <= mean(rs), fmt("mean MPJPE over 5 seeds: K-Means %.1f mm, RandomSample %.1f mm", mean(km), mean(rs))};
}

Outcome iteration_sweep() {
  Experiment& ex = experiment();
  const std::vector<Hypothesis> hyps = Experiment::hypotheses(kmeans_anchors(ex.train_rel, 1, 0));
  const std::vector<int> ns{100, 250, 500, 1000, 1500, 2000};
  std::vector<double> err, secs;
  for (int n : ns) {
    OptimizerConfig cfg = ex.desk.optimizer;
    cfg.warmup_iters = n * ex.desk.optimizer.warmup_iters / ex.desk.optimizer.total_iters;
    cfg.total_iters = n;
    const auto t0 = Clock::now();
    err.push_back(mean(ex.errors(hyps, cfg)));
    secs.push_back(seconds_since(t0));
  }
  // Least-squares line through (n, seconds).
  const double k = static_cast<double>(ns.size());
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  for (std::size_t i = 0; i < ns.size(); ++i) sx += ns[i], sy += secs[i], sxx += double(ns[i]) * ns[i], sxy += ns[i] * secs[i];
  const double slope = (k * sxy - sx * sy) / (k * sxx - sx * sx), icpt = (sy - slope * sx) / k;
  double worst = 0.0;
  for (std::size_t i = 0; i < ns.size(); ++i) {
    const double fit = icpt + slope * ns[i];
    worst = std::max(worst, std::abs(secs[i] - fit) / fit);
  }
  std::ostringstream rows;
  for (std::size_t i = 0; i < ns.size(); ++i) rows << fmt(" n=%d:%.1fmm/%.1fs", ns[i], err[i], secs[i]);
  return {err[3] <= err[0] && worst <= 0.2,
          fmt("largest deviation from linear time %.1f%%;", 100.0 * worst) + rows.str()};
}

// ---------------------------------------------------------------------------
// 10. Metric identities
// ---------------------------------------------------------------------------

Pose3D random_pose(std::mt19937_64& rng, int joints = 17) {
  std::normal_distribution<double> nd(0.0, 0.3);
  Joints3 j(joints, 3);
  for (Eigen::Index i = 0; i < j.size(); ++i) j.data()[i] = nd(rng);
  return {j, Frame::CameraAbsolute};
}

Outcome metric_identities() {
  const auto t0 = Clock::now();
  std::mt19937_64 rng(10);
  std::uniform_real_distribution<double> u(-1.0, 1.0), scale(0.3, 3.0);
  double pa_gap = 0.0;
  for (int i = 0; i < 200; ++i) {
    const Pose3D pred = random_pose(rng), gt = random_pose(rng);
    const Mat3 r = Eigen::AngleAxisd(3.0 * u(rng), Vec3(u(rng), u(rng), u(rng)).normalized()).toRotationMatrix();
    const Vec3 t(u(rng), u(rng), 5.0 + u(rng));
    const Pose3D moved((scale(rng) * (pred.joints * r.transpose())).rowwise() + t.transpose(), Frame::CameraAbsolute);
    pa_gap = std::max(pa_gap, std::abs(pa_mpjpe(moved, gt) - pa_mpjpe(pred, gt)));
  }

  bool monotone = true;
  for (int i = 0; i < 50; ++i) {
    const Pose3D gt = random_pose(rng);
    std::vector<Pose3D> hyps;
    double prev = std::numeric_limits<double>::infinity();
    for (int s = 0; s < 10; ++s) {
      hyps.push_back(random_pose(rng));
      const double m = min_mpjpe(hyps, gt);
      monotone = monotone && m <= prev;
      prev = m;
    }
  }

  // Fixture: joint j displaced by 20 j mm along x, root at zero error.
  const int joints = 17;
  Pose3D gt(Joints3::Zero(joints, 3), Frame::CameraAbsolute);
  for (int j = 0; j < joints; ++j) gt.joints(j, 1) = 0.1 * j;
  Pose3D pred = gt;
  for (int j = 0; j < joints; ++j) pred.joints(j, 0) += 0.02 * j;
  MetricOptions opt;
  const PckAuc pa = pck_auc(pred, gt, opt);
  double want_mpjpe = 0.0, want_pck = 0.0, want_auc = 0.0;
  for (int j = 0; j < joints; ++j) want_mpjpe += 20.0 * j / joints, want_pck += (20 * j <= 150) / double(joints);
  for (int k = 0; k <= 30; ++k) {
    int in = 0;
    for (int j = 0; j < joints; ++j) in += 20 * j <= 5 * k;
    want_auc += double(in) / joints / 31.0;
  }
  const bool fixture = std::abs(mpjpe(pred, gt, opt) - want_mpjpe) < 1e-9 && std::abs(pa.pck - want_pck) < 1e-12 &&
                       std::abs(pa.auc - want_auc) < 1e-12;
  const double secs = seconds_since(t0);
  return {pa_gap <= 1e-6 && monotone && fixture && secs < 5.0,
          fmt("PA invariance gap %.2e mm; min_mpjpe monotone: %s; PCK %.4f (want %.4f), AUC %.4f (want %.4f) (%.2f s)",
              pa_gap, monotone ? "yes" : "no", pa.pck, want_pck, pa.auc, want_auc, secs)};
}

// ---------------------------------------------------------------------------
// 11. File formats
// ---------------------------------------------------------------------------

std::string from_hex(const std::string& hex) {
  std::string out;
  std::istringstream in(hex);
  for (std::string byte; in >> byte;) out.push_back(static_cast<char>(std::stoi(byte, nullptr, 16)));
  return out;
}

Outcome format_round_trips() {
  std::mt19937_64 rng(11);
  std::vector<std::string> bad;

  std::vector<Pose3D> poses;
  for (int i = 0; i < 25; ++i) poses.push_back(random_pose(rng));
  const std::string zpse = io::encode_poses(poses, Frame::CameraAbsolute, SkeletonSpec::h36m17().hash());
  const io::PoseFile back = io::decode_poses(zpse, 17);
  if (io::encode_poses(back.poses, back.header.frame, back.header.skeleton_hash) != zpse) bad.push_back("zpse");
  for (std::size_t i = 0; i < poses.size(); ++i)
    if (back.poses[i].joints != poses[i].joints.cast<float>().cast<double>()) bad.push_back("zpse values");

  const std::string fixture = from_hex(
      "5A 50 53 45 01 00 02 00 01 00 00 00 00 00 00 00 01 EF CD AB 89 67 45 23 01 "
      "00 00 80 3F 00 00 00 C0 00 00 00 3F 00 00 00 00 00 00 80 3E 00 00 40 40");
  const Pose3D fx(Joints3{{1.0, -2.0, 0.5}, {0.0, 0.25, 3.0}}, Frame::PelvisRelative);
  if (io::encode_poses({fx}, Frame::PelvisRelative, 0x0123456789ABCDEFULL) != fixture) bad.push_back("zpse hex fixture");
  if (io::decode_poses(fixture).poses.at(0).joints != fx.joints) bad.push_back("zpse hex decode");

  const ScoreModelF model(ModelDims{}, SdeConfig{}, 3);
  const std::string ckpt = io::encode_checkpoint(model);
  if (io::encode_checkpoint(io::decode_checkpoint<float>(ckpt)) != ckpt) bad.push_back("checkpoint");

  std::vector<Pose2D> frames;
  std::uniform_real_distribution<double> px(0.0, 1000.0), c(0.0, 1.0);
  for (int f = 0; f < 4; ++f) {
    Pose2D p(Joints2(17, 2), Eigen::VectorXd(17));
    for (int j = 0; j < 17; ++j) p.pixels(j, 0) = px(rng), p.pixels(j, 1) = px(rng), p.confidence[j] = c(rng);
    frames.push_back(p);
  }
  const std::string csv = io::encode_csv_keypoints(frames);
  const io::CsvKeypoints parsed = io::parse_csv_keypoints(csv, 17);
  for (int f = 0; f < 4; ++f)
    if (parsed.frames[f].pixels != frames[f].pixels || parsed.frames[f].confidence != frames[f].confidence)
      bad.push_back("csv values");
  if (io::encode_csv_keypoints(parsed.frames) != csv) bad.push_back("csv");

  const cli::Settings s = cli::profile_settings("desk");
  cli::Settings t = cli::profile_settings("paper");
  t.update(io::json::parse(s.to_json().dump()));
  if (t.to_json().dump() != s.to_json().dump()) bad.push_back("config json");

  std::ostringstream detail;
  detail << "ZPSE, checkpoint, CSV and config round trips bitwise; ZPSE hex fixture";
  for (const std::string& b : bad) detail << "; mismatch: " << b;
  return {bad.empty(), detail.str()};
}

}  // namespace

int main() {
  int failures = 0;
  auto report = [&](int id, const char* name, const std::function<Outcome()>& fn) {
    Outcome o;
    try {
      o = fn();
    } catch (const std::exception& e) {
      o = {false, std::string("threw: ") + e.what()};
    }
    failures += !o.pass;
    std::cout << (o.pass ? "PASS" : "FAIL") << " [" << id << "] " << name << ": " << o.detail << std::endl;
  };

  report(1, "loss gradients vs finite differences", dsm_gradients);
  report(2, "perturbation moments", perturb_moments);
  report(3, "translation solve", translation_solve);
  report(10, "metric identities", metric_identities);
  report(11, "file format round trips", format_round_trips);

  report(6, "desk-scale accuracy", desk_accuracy);
  std::vector<OptimizationTrace> traces;
  try {
    traces = sample_traces();
  } catch (const std::exception& e) {
    std::cout << "  trace run threw: " << e.what() << "\n";
  }
  report(4, "post-projection reprojection", [&] { return projection_exactness(traces); });
  report(5, "loop structure", [&] { return loop_structure(traces, experiment().desk.optimizer); });
  report(7, "denoising improves accuracy", prior_helps);
  report(8, "K-Means vs RandomSample anchors", kmeans_vs_random);
  report(9, "iteration sweep", iteration_sweep);

  std::cout << (failures ? "FAILED" : "ALL PASSED") << " (" << failures << " failing)" << std::endl;
  return failures ? 1 : 0;
}
