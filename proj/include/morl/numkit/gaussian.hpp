#ifndef MORL_NUMKIT_GAUSSIAN_HPP_
#define MORL_NUMKIT_GAUSSIAN_HPP_

#include <algorithm>
#include <cmath>
#include <numbers>
#include <string>

#include "morl/numkit/mlp.hpp"
#include "morl/numkit/param_tensor.hpp"

namespace morl::numkit {

inline constexpr double kHalfLog2Pi = 0.91893853320467274178;  // 0.5*log(2*pi)

// Diagonal Gaussian with a learnable, state-independent log standard
// deviation. The mean comes from an external network.
class GaussianPolicyHead {
 public:
  static constexpr double kMinLogStd = -5.0;
  static constexpr double kMaxLogStd = 2.0;

  GaussianPolicyHead() = default;
  GaussianPolicyHead(const std::string& name, std::size_t action_dim, double init_log_std = 0.0)
      : log_std_(name + ".log_std", {action_dim}) {
    std::fill(log_std_.values.begin(), log_std_.values.end(), init_log_std);
    clamp();
  }

  std::size_t action_dim() const { return log_std_.size(); }
  ParamTensor& log_std() { return log_std_; }
  const ParamTensor& log_std() const { return log_std_; }

  double log_std_at(std::size_t i) const {
    return std::clamp(log_std_.values[i], kMinLogStd, kMaxLogStd);
  }

  void clamp() {
    for (double& v : log_std_.values) v = std::clamp(v, kMinLogStd, kMaxLogStd);
  }

  // sum_i [ -(a_i-mu_i)^2 / (2 sigma_i^2) - log sigma_i - 0.5 log 2pi ]
  double log_prob(const Eigen::Ref<const Vector>& mean,
                  const Eigen::Ref<const Vector>& action) const {
    check_dims(mean, action);
    double lp = 0.0;
    for (Eigen::Index i = 0; i < mean.size(); ++i) {
      const double ls = log_std_at(static_cast<std::size_t>(i));
      const double z = (action[i] - mean[i]) * std::exp(-ls);
      lp += -0.5 * z * z - ls - kHalfLog2Pi;
    }
    return lp;
  }

  // d log_prob / d mean
  Vector log_prob_grad_mean(const Eigen::Ref<const Vector>& mean,
                            const Eigen::Ref<const Vector>& action) const {
    check_dims(mean, action);
    Vector g(mean.size());
    for (Eigen::Index i = 0; i < mean.size(); ++i) {
      const double var = std::exp(2.0 * log_std_at(static_cast<std::size_t>(i)));
      g[i] = (action[i] - mean[i]) / var;
    }
    return g;
  }

  // d log_prob / d log_std (zero where the clamp is active)
  Vector log_prob_grad_log_std(const Eigen::Ref<const Vector>& mean,
                               const Eigen::Ref<const Vector>& action) const {
    check_dims(mean, action);
    Vector g(mean.size());
    for (Eigen::Index i = 0; i < mean.size(); ++i) {
      const auto k = static_cast<std::size_t>(i);
      const double ls = log_std_at(k);
      const double z = (action[i] - mean[i]) * std::exp(-ls);
      g[i] = clamp_active(k) ? 0.0 : z * z - 1.0;
    }
    return g;
  }

  double entropy() const {
    double h = 0.0;
    for (std::size_t i = 0; i < action_dim(); ++i) h += log_std_at(i) + kHalfLog2Pi + 0.5;
    return h;
  }

  // d entropy / d log_std
  Vector entropy_grad_log_std() const {
    Vector g(static_cast<Eigen::Index>(action_dim()));
    for (std::size_t i = 0; i < action_dim(); ++i) {
      g[static_cast<Eigen::Index>(i)] = clamp_active(i) ? 0.0 : 1.0;
    }
    return g;
  }

  Vector sample(const Eigen::Ref<const Vector>& mean, Rng& rng) const {
    Vector a(mean.size());
    for (Eigen::Index i = 0; i < mean.size(); ++i) {
      a[i] = mean[i] + std::exp(log_std_at(static_cast<std::size_t>(i))) * standard_normal(rng);
    }
    return a;
  }

 private:
  bool clamp_active(std::size_t i) const {
    const double v = log_std_.values[i];
    return v < kMinLogStd || v > kMaxLogStd;
  }

  void check_dims(const Eigen::Ref<const Vector>& mean,
                  const Eigen::Ref<const Vector>& action) const {
    if (mean.size() != static_cast<Eigen::Index>(action_dim()) || action.size() != mean.size()) {
      throw ConfigError("GaussianPolicyHead: dimension mismatch");
    }
  }

  ParamTensor log_std_;
};

}  // namespace morl::numkit

#endif  // MORL_NUMKIT_GAUSSIAN_HPP_
