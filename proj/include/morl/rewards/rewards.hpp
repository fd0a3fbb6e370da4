#ifndef MORL_REWARDS_REWARDS_HPP_
#define MORL_REWARDS_REWARDS_HPP_

#include <algorithm>
#include <cmath>
#include <limits>
#include <span>
#include <string>

#include "morl/common/error.hpp"
#include "morl/common/rng.hpp"
#include "morl/env/types.hpp"

namespace morl::rewards {

using env::Twist;
using env::VelocityCommand;
using env::Wrench;

inline constexpr double kPreferenceSum = 2.0;

// Weights for (tracking, compliance, regularization).
struct PreferenceVector {
  double w_c = 1.0;
  double w_f = 1.0;
  double w_r = 1.0;

  bool valid(double tol = 1e-9) const {
    return w_c >= 0.0 && w_f >= 0.0 && std::abs(w_c + w_f - kPreferenceSum) <= tol &&
           std::isfinite(w_r);
  }

  // Preference with the given tracking weight; w_f = 2 - w_c.
  static PreferenceVector from_tracking_weight(double w_c, double w_r = 1.0) {
    return {w_c, kPreferenceSum - w_c, w_r};
  }

  bool operator==(const PreferenceVector&) const = default;
};

struct RewardVector {
  double r_c = 0.0;
  double r_f = 0.0;
  double r_r = 0.0;

  bool operator==(const RewardVector&) const = default;
};

// Velocity-resistance mapping gains and the shared reward bandwidth.
struct ComplianceModel {
  double k_lin = 0.04;  // (m/s)/N
  double k_ang = 0.2;   // (rad/s)/(N*m)
  double sigma = 0.25;
  double angular_scale = 1.0;  // weight of the yaw channel inside the norm

  void validate() const {
    if (!(k_lin > 0.0 && k_ang > 0.0 && sigma > 0.0 && angular_scale >= 0.0)) {
      throw ConfigError("ComplianceModel: k_lin, k_ang, sigma must be > 0");
    }
  }
};

// Penalty weights of the regularization objective: effort, action rate and
// yaw rate.
struct RegularizationCoefs {
  double effort = 0.01;
  double smoothness = 0.05;
  double spin = 0.002;
};

inline Twist equivalent_velocity(const ComplianceModel& model, const Wrench& wrench) {
  return {model.k_lin * wrench.fx, model.k_lin * wrench.fy, model.k_ang * wrench.tau};
}

inline double squared_error(const Twist& v, const Twist& target, double angular_scale) {
  const double ex = v.vx - target.vx;
  const double ey = v.vy - target.vy;
  const double ew = v.omega - target.omega;
  return ex * ex + ey * ey + angular_scale * ew * ew;
}

// exp(-err2 / sigma), floored at the smallest normal double so the reward
// stays strictly positive for any finite error.
inline double gaussian_kernel(double err2, double sigma) {
  return std::max(std::exp(-err2 / sigma), std::numeric_limits<double>::min());
}

inline double tracking_reward(const Twist& v, const VelocityCommand& command, double sigma,
                              double angular_scale = 1.0) {
  return gaussian_kernel(squared_error(v, command.as_twist(), angular_scale), sigma);
}

inline double compliance_reward(const Twist& v, const Wrench& wrench, const ComplianceModel& model) {
  return gaussian_kernel(squared_error(v, equivalent_velocity(model, wrench), model.angular_scale),
                         model.sigma);
}

template <typename Action>
double regularization_reward(const Action& action, const Action& prev_action, double omega,
                             const RegularizationCoefs& c) {
  double effort = 0.0;
  double rate = 0.0;
  for (std::size_t i = 0; i < static_cast<std::size_t>(action.size()); ++i) {
    effort += action[i] * action[i];
    const double d = action[i] - prev_action[i];
    rate += d * d;
  }
  return -c.effort * effort - c.smoothness * rate - c.spin * omega * omega;
}

inline double scalarize(const RewardVector& r, const PreferenceVector& w) {
  return w.w_c * r.r_c + w.w_f * r.r_f + w.w_r * r.r_r;
}

// Draws w_c ~ U(0,2), w_f = 2 - w_c, w_r ~ U(1,2).
inline PreferenceVector sample_preference(Rng& rng) {
  PreferenceVector w;
  w.w_c = uniform(rng, 0.0, kPreferenceSum);
  w.w_f = kPreferenceSum - w.w_c;
  w.w_r = uniform(rng, 1.0, 2.0);
  return w;
}

enum class Channels { kLinear, kAngular, kAll };

struct MseMetrics {
  double tracking = 0.0;
  double compliance = 0.0;
};

inline double channel_error(const Twist& v, const Twist& target, Channels ch) {
  const double ex = v.vx - target.vx;
  const double ey = v.vy - target.vy;
  const double ew = v.omega - target.omega;
  switch (ch) {
    case Channels::kLinear: return ex * ex + ey * ey;
    case Channels::kAngular: return ew * ew;
    case Channels::kAll: return ex * ex + ey * ey + ew * ew;
  }
  return 0.0;
}

// Time-averaged squared deviation of the realized velocity from the command
// and from the force-equivalent velocity.
inline MseMetrics mse_metrics(std::span<const Twist> trajectory, const VelocityCommand& command,
                              const Wrench& wrench, const ComplianceModel& model,
                              Channels channels = Channels::kLinear) {
  if (trajectory.empty()) throw EvaluationError("mse_metrics: empty trajectory");
  const Twist target_c = command.as_twist();
  const Twist target_f = equivalent_velocity(model, wrench);
  MseMetrics m;
  for (const auto& v : trajectory) {
    m.tracking += channel_error(v, target_c, channels);
    m.compliance += channel_error(v, target_f, channels);
  }
  const auto n = static_cast<double>(trajectory.size());
  m.tracking /= n;
  m.compliance /= n;
  return m;
}

}  // namespace morl::rewards

#endif  // MORL_REWARDS_REWARDS_HPP_
