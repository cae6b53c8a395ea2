#pragma once

// Sub-variance-preserving SDE with a linear beta schedule.
//
//   beta(t) = beta_min + t (beta_max - beta_min)
//   B(t)    = int_0^t beta = beta_min t + (beta_max - beta_min) t^2 / 2
//   x(t) | x(0) ~ N(x(0) e^{-B/2}, (1 - e^{-B})^2 I)
//
// Forward SDE: dx = -beta/2 x dt + sqrt(beta (1 - e^{-2B})) dw.

#include "zedo/core.hpp"

#include <cmath>
#include <string>

namespace zedo {

struct SdeConfig {
  double beta_min = 0.1;
  double beta_max = 20.0;

  void validate() const {
    if (!(beta_min > 0.0) || !(beta_max > beta_min))
      throw ConfigError("SDE requires 0 < beta_min < beta_max");
  }

  double beta(double t) const { return beta_min + t * (beta_max - beta_min); }
  double integral(double t) const { return beta_min * t + 0.5 * (beta_max - beta_min) * t * t; }

  double mean_coeff(double t) const { return std::exp(-0.5 * integral(t)); }
  /// Standard deviation of the perturbation kernel, 1 - e^{-B(t)}.
  double sigma(double t) const { return -std::expm1(-integral(t)); }

  /// Squared diffusion coefficient g(t)^2 of the forward SDE.
  double diffusion_sq(double t) const { return beta(t) * -std::expm1(-2.0 * integral(t)); }

  friend bool operator==(const SdeConfig&, const SdeConfig&) = default;
};

inline void check_time(double t, double upper = 1.0) {
  if (!(t > 0.0 && t <= upper))
    throw OutOfRangeTime("t = " + std::to_string(t) + " outside (0, " + std::to_string(upper) + "]");
}

/// x_t = mean_coeff(t) x0 + sigma(t) z
inline Eigen::VectorXd perturb(const SdeConfig& sde, const Eigen::Ref<const Eigen::VectorXd>& x0,
                               double t, const Eigen::Ref<const Eigen::VectorXd>& z) {
  check_time(t);
  if (x0.size() != z.size()) throw JointCountMismatch("noise and pose sizes differ");
  return sde.mean_coeff(t) * x0 + sde.sigma(t) * z;
}

}  // namespace zedo
