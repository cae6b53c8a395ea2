#pragma once

// Denoising score matching loss, Adam, and the training loop.

#include "zedo/core.hpp"
#include "zedo/diffusion/score_model.hpp"
#include "zedo/diffusion/sde.hpp"
#include "zedo/skeleton.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdint>
#include <functional>
#include <numbers>
#include <numeric>
#include <random>
#include <vector>

namespace zedo {

template <typename Scalar>
struct LossAndGrad {
  double loss = 0.0;
  typename ScoreModel<Scalar>::Params grad;
};

/// Mean over the batch of ||sigma(t) s(x_t, t) + z||^2 given precomputed scores.
/// Columns are samples.
inline double dsm_loss_from_scores(const Eigen::MatrixXd& scores, const std::vector<double>& sigmas,
                                   const Eigen::MatrixXd& noises) {
  double total = 0.0;
  for (Eigen::Index b = 0; b < scores.cols(); ++b)
    total += (sigmas[b] * scores.col(b) + noises.col(b)).squaredNorm();
  return total / static_cast<double>(scores.cols());
}

/// Loss ||sigma s_theta(x_t, t) + z||^2 averaged over the batch, with gradients for
/// every parameter. `clean` holds x(0) per column, `noises` the matching z.
template <typename Scalar>
LossAndGrad<Scalar> dsm_loss(const ScoreModel<Scalar>& model,
                             const typename ScoreModel<Scalar>::Mat& clean,
                             const std::vector<double>& times,
                             const typename ScoreModel<Scalar>::Mat& noises) {
  using Mat = typename ScoreModel<Scalar>::Mat;
  const Eigen::Index batch = clean.cols();
  if (batch == 0) throw ConfigError("empty batch");
  if (static_cast<Eigen::Index>(times.size()) != batch || noises.cols() != batch ||
      noises.rows() != clean.rows())
    throw JointCountMismatch("batch, times and noises disagree in shape");

  const SdeConfig& sde = model.sde();
  Mat noisy(clean.rows(), batch);
  Eigen::Matrix<Scalar, 1, Eigen::Dynamic> sig(batch);
  for (Eigen::Index b = 0; b < batch; ++b) {
    check_time(times[b]);
    sig[b] = static_cast<Scalar>(sde.sigma(times[b]));
    noisy.col(b) = static_cast<Scalar>(sde.mean_coeff(times[b])) * clean.col(b) + sig[b] * noises.col(b);
  }

  typename ScoreModel<Scalar>::Cache cache;
  const Mat eps = model.forward(noisy, times, &cache);
  // sigma * s + z with s = -eps / sigma
  Mat score = -eps;
  score.array().rowwise() /= sig.array();
  Mat resid = score;
  resid.array().rowwise() *= sig.array();
  resid += noises;

  LossAndGrad<Scalar> out;
  out.loss = static_cast<double>(resid.squaredNorm()) / static_cast<double>(batch);
  if (!std::isfinite(out.loss)) throw NonFiniteLoss("loss = " + std::to_string(out.loss));

  // dL/ds = 2 sigma r / B and ds/deps = -1 / sigma.
  const Mat d_eps = resid * static_cast<Scalar>(-2.0 / static_cast<double>(batch));
  model.backward(cache, d_eps, out.grad);
  return out;
}

/// Adam with bias correction.
template <typename Scalar>
class Adam {
 public:
  explicit Adam(std::size_t n, double beta1 = 0.9, double beta2 = 0.999, double eps = 1e-8)
      : m_(n, 0.0), v_(n, 0.0), beta1_(beta1), beta2_(beta2), eps_(eps) {}

  void step(std::span<Scalar> params, std::span<const Scalar> grad, double lr) {
    ++t_;
    const double c1 = 1.0 - std::pow(beta1_, static_cast<double>(t_));
    const double c2 = 1.0 - std::pow(beta2_, static_cast<double>(t_));
    for (std::size_t i = 0; i < params.size(); ++i) {
      const double g = static_cast<double>(grad[i]);
      m_[i] = beta1_ * m_[i] + (1.0 - beta1_) * g;
      v_[i] = beta2_ * v_[i] + (1.0 - beta2_) * g * g;
      const double update = lr * (m_[i] / c1) / (std::sqrt(v_[i] / c2) + eps_);
      params[i] = static_cast<Scalar>(static_cast<double>(params[i]) - update);
    }
  }

  std::int64_t steps() const { return t_; }

 private:
  std::vector<double> m_, v_;
  double beta1_, beta2_, eps_;
  std::int64_t t_ = 0;
};

struct TrainConfig {
  int epochs = 200;
  int batch_size = 512;
  double learning_rate = 2e-4;
  int warmup_iters = 200;
  std::uint64_t seed = 0;
  bool flip = true;
  bool rotate = true;
  /// Axis of the rotation augmentation, in the pose frame.
  Vec3 rotation_axis = Vec3::UnitY();
  /// Training times are drawn from U[min_time, 1], except that a `focus_fraction`
  /// share of samples is drawn from U[min_time, focus_max_time] instead.
  double min_time = 1e-5;
  double focus_fraction = 0.0;
  double focus_max_time = 0.1;
  /// Exponential smoothing factor for the logged loss.
  double smoothing = 0.98;

  void validate() const {
    if (epochs < 1 || batch_size < 1 || !(learning_rate > 0.0) || warmup_iters < 0)
      throw ConfigError("train config requires positive epochs, batch_size and learning_rate");
    if (!(min_time > 0.0 && min_time < focus_max_time && focus_max_time <= 1.0))
      throw ConfigError("training times need 0 < min_time < focus_max_time <= 1");
    if (!(focus_fraction >= 0.0 && focus_fraction <= 1.0)) throw ConfigError("focus_fraction must lie in [0, 1]");
    if (rotate && !(rotation_axis.norm() > 0.0)) throw ConfigError("rotation_axis must be nonzero");
  }
};

/// Linear warmup to the base rate, then cosine decay to zero.
inline double learning_rate_at(const TrainConfig& cfg, std::int64_t step, std::int64_t total_steps) {
  if (cfg.warmup_iters > 0 && step < cfg.warmup_iters)
    return cfg.learning_rate * static_cast<double>(step + 1) / static_cast<double>(cfg.warmup_iters);
  const double span = static_cast<double>(std::max<std::int64_t>(1, total_steps - cfg.warmup_iters));
  const double progress = std::clamp(static_cast<double>(step - cfg.warmup_iters) / span, 0.0, 1.0);
  return cfg.learning_rate * 0.5 * (1.0 + std::cos(std::numbers::pi * progress));
}

struct TrainLogRecord {
  std::int64_t step = 0;
  int epoch = 0;
  double loss = 0.0;
  double smoothed_loss = 0.0;
  double learning_rate = 0.0;
};

struct TrainHooks {
  std::function<void(const TrainLogRecord&)> on_step;
  /// Polled once per step; training stops early (returning the current model) when set.
  const std::atomic<bool>* stop = nullptr;
};

template <typename Scalar>
struct TrainResult {
  ScoreModel<Scalar> model;
  std::vector<TrainLogRecord> log;
  bool interrupted = false;

  double initial_loss() const { return log.empty() ? 0.0 : log.front().loss; }
  double final_smoothed_loss() const { return log.empty() ? 0.0 : log.back().smoothed_loss; }
};

/// Trains a score model on pelvis-relative poses. Runs are bitwise reproducible for
/// a fixed seed: all randomness flows from one generator in a fixed order.
template <typename Scalar = float>
TrainResult<Scalar> train(const std::vector<Pose3D>& dataset, const SkeletonSpec& spec,
                          const ModelDims& dims, const SdeConfig& sde, const TrainConfig& cfg,
                          const TrainHooks& hooks = {}) {
  using Mat = typename ScoreModel<Scalar>::Mat;
  cfg.validate();
  if (dataset.empty()) throw TooFewPoses("training set is empty");
  if (dims.joints != spec.num_joints() || dims.pelvis_index != spec.pelvis_index)
    throw JointCountMismatch("model dims do not match the skeleton");
  for (const Pose3D& p : dataset) {
    if (p.num_joints() != dims.joints)
      throw JointCountMismatch("training pose has " + std::to_string(p.num_joints()) + " joints");
    if (p.frame != Frame::PelvisRelative) throw ConfigError("training poses must be pelvis-relative");
  }

  std::mt19937_64 rng(cfg.seed);
  TrainResult<Scalar> result{ScoreModel<Scalar>(dims, sde, rng()), {}, false};
  ScoreModel<Scalar>& model = result.model;
  Adam<Scalar> adam(model.param_count());

  const int n = static_cast<int>(dataset.size());
  const int batch = std::min(cfg.batch_size, n);
  const int steps_per_epoch = (n + batch - 1) / batch;
  const std::int64_t total_steps = static_cast<std::int64_t>(steps_per_epoch) * cfg.epochs;
  const int in_dim = dims.input_dim();

  std::normal_distribution<double> normal(0.0, 1.0);
  std::uniform_real_distribution<double> unif(0.0, 1.0);
  std::vector<int> order(n);
  std::iota(order.begin(), order.end(), 0);

  double smoothed = 0.0;
  std::int64_t step = 0;
  for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
    std::shuffle(order.begin(), order.end(), rng);
    for (int s = 0; s < steps_per_epoch; ++s, ++step) {
      if (hooks.stop && hooks.stop->load()) {
        result.interrupted = true;
        return result;
      }
      const int begin = s * batch;
      const int count = std::min(batch, n - begin);
      Mat clean(in_dim, count), noise(in_dim, count);
      std::vector<double> times(count);
      for (int b = 0; b < count; ++b) {
        Pose3D pose = dataset[order[begin + b]];
        if (cfg.flip && unif(rng) < 0.5) pose = flip_lr(pose, spec);
        if (cfg.rotate) pose = rotate_about_axis(pose, cfg.rotation_axis, 2.0 * std::numbers::pi * unif(rng));
        clean.col(b) = pose.flattened().cast<Scalar>();
        const double hi = unif(rng) < cfg.focus_fraction ? cfg.focus_max_time : 1.0;
        times[b] = cfg.min_time + (hi - cfg.min_time) * unif(rng);
        for (int k = 0; k < in_dim; ++k) noise(k, b) = static_cast<Scalar>(normal(rng));
      }

      const LossAndGrad<Scalar> lg = dsm_loss(model, clean, times, noise);
      const double lr = learning_rate_at(cfg, step, total_steps);
      adam.step(model.params(), lg.grad, lr);

      smoothed = step == 0 ? lg.loss : cfg.smoothing * smoothed + (1.0 - cfg.smoothing) * lg.loss;
      TrainLogRecord rec{step, epoch, lg.loss, smoothed, lr};
      result.log.push_back(rec);
      if (hooks.on_step) hooks.on_step(rec);
    }
  }
  if (!model.params_finite()) throw NonFiniteLoss("parameters diverged");
  return result;
}

}  // namespace zedo
