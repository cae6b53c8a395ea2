#pragma once

// Reverse-time integration of the sub-VP SDE: the truncated denoiser used inside
// the pose optimizer and unconditional sampling from pure noise.

#include "zedo/core.hpp"
#include "zedo/diffusion/score_model.hpp"
#include "zedo/diffusion/sde.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <random>
#include <vector>

namespace zedo {

/// How the clean input pose enters the reverse process at t_start.
enum class ForwardInput {
  /// Used unchanged as x(t_start).
  AsNoisy,
  /// Scaled by the forward mean coefficient, no noise.
  Mean,
  /// Sampled from the forward kernel (requires an rng).
  Sample,
};

/// Deterministic step rule for the probability-flow ODE.
enum class Integrator {
  Euler,
  /// Exact in the linear drift, first order in the score: x/m moves by d(sigma/m) times
  /// the predicted noise.
  Exponential,
};

struct ReverseOptions {
  /// Euler-Maruyama on the reverse SDE instead of the probability-flow ODE.
  bool stochastic = false;
  Integrator integrator = Integrator::Exponential;
  ForwardInput input = ForwardInput::Mean;
};

/// Integrates x from t_from down to t_to in `steps` equal steps. The score is only
/// evaluated at the left end of each step, so t_to may be 0.
template <typename Scalar>
Eigen::VectorXd reverse_integrate(const ScoreModel<Scalar>& model, Eigen::VectorXd x, double t_from,
                                  double t_to, int steps, bool stochastic, std::mt19937_64* rng,
                                  Integrator integrator = Integrator::Euler) {
  const SdeConfig& sde = model.sde();
  const double dt = (t_from - t_to) / steps;
  std::normal_distribution<double> normal(0.0, 1.0);
  for (int k = 0; k < steps; ++k) {
    const double t = t_from - k * dt;
    const Eigen::VectorXd s = model.score(x, t);
    if (!stochastic && integrator == Integrator::Exponential) {
      const double s_next = std::max(t - dt, 0.0);
      const double m = sde.mean_coeff(t), m_next = sde.mean_coeff(s_next);
      const double sig = sde.sigma(t);
      // Predicted noise is -sigma * score.
      x = m_next * (x / m - (sde.sigma(s_next) / m_next - sig / m) * sig * s);
      continue;
    }
    const double g2 = sde.diffusion_sq(t);
    const Eigen::VectorXd drift = -0.5 * sde.beta(t) * x - (stochastic ? 1.0 : 0.5) * g2 * s;
    x -= dt * drift;
    if (stochastic && rng && k + 1 < steps) {
      const double scale = std::sqrt(g2 * dt);
      for (Eigen::Index i = 0; i < x.size(); ++i) x[i] += scale * normal(*rng);
    }
  }
  return x;
}

/// Maps a pelvis-relative pose to x(t_start) per `opts.input` and integrates back
/// to t = 0. `rng` is required only when noise is involved.
template <typename Scalar>
Pose3D denoise(const ScoreModel<Scalar>& model, const Pose3D& pose, double t_start, int steps,
               const ReverseOptions& opts = {}, std::mt19937_64* rng = nullptr) {
  check_time(t_start);
  if (pose.num_joints() != model.dims().joints)
    throw JointCountMismatch("pose has " + std::to_string(pose.num_joints()) + " joints, model expects " +
                             std::to_string(model.dims().joints));
  if (steps < 0) throw ConfigError("denoise steps must be >= 0");

  Eigen::VectorXd x = pose.flattened();
  if (steps > 0) {
    const double m = model.sde().mean_coeff(t_start);
    if (opts.input == ForwardInput::Mean) {
      x *= m;
    } else if (opts.input == ForwardInput::Sample) {
      if (!rng) throw ConfigError("forward sampling needs a random generator");
      std::normal_distribution<double> normal(0.0, 1.0);
      const double sig = model.sde().sigma(t_start);
      for (Eigen::Index i = 0; i < x.size(); ++i) x[i] = m * x[i] + sig * normal(*rng);
    }
    x = reverse_integrate(model, std::move(x), t_start, 0.0, steps, opts.stochastic, rng, opts.integrator);
  }
  Pose3D out = Pose3D::from_flat(x, Frame::PelvisRelative);
  out.joints.row(model.dims().pelvis_index).setZero();
  if (!out.all_finite()) throw NonFinitePose("denoiser produced non-finite coordinates");
  return out;
}

struct SampleOptions {
  int steps = 1000;
  /// Integration stops here instead of at 0, where the score is singular.
  double end_time = 1e-3;
};

/// Draws poses by integrating the reverse SDE from x(1) ~ N(0, I).
template <typename Scalar>
std::vector<Pose3D> sample(const ScoreModel<Scalar>& model, int count, std::uint64_t seed,
                           const SampleOptions& opts = {}) {
  if (count < 0) throw ConfigError("sample count must be >= 0");
  if (opts.steps < 1) throw ConfigError("sample steps must be >= 1");
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal(0.0, 1.0);
  std::vector<Pose3D> out;
  out.reserve(count);
  for (int c = 0; c < count; ++c) {
    Eigen::VectorXd x(model.dims().input_dim());
    for (Eigen::Index i = 0; i < x.size(); ++i) x[i] = normal(rng);
    x = reverse_integrate(model, std::move(x), 1.0, opts.end_time, opts.steps, true, &rng);
    Pose3D p = Pose3D::from_flat(x, Frame::PelvisRelative);
    p.joints.row(model.dims().pelvis_index).setZero();
    if (!p.all_finite()) throw NonFinitePose("sampler produced non-finite coordinates");
    out.push_back(std::move(p));
  }
  return out;
}

}  // namespace zedo
