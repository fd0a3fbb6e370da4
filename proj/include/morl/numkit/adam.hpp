#ifndef MORL_NUMKIT_ADAM_HPP_
#define MORL_NUMKIT_ADAM_HPP_

#include <cmath>
#include <cstdint>
#include <string>
#include <vector>

#include "morl/common/error.hpp"
#include "morl/numkit/param_tensor.hpp"

namespace morl::numkit {

struct AdamConfig {
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
};

// Bias-corrected adaptive-moment optimizer over a fixed parameter list.
class Adam {
 public:
  Adam() = default;
  Adam(ParamRefs params, AdamConfig config = {}) : params_(std::move(params)), config_(config) {
    for (const auto* p : params_) {
      first_.emplace_back(p->size(), 0.0);
      second_.emplace_back(p->size(), 0.0);
    }
  }

  const ParamRefs& params() const { return params_; }
  std::uint64_t step_count() const { return step_count_; }
  void set_step_count(std::uint64_t n) { step_count_ = n; }
  AlignedBuffer& first_moment(std::size_t i) { return first_.at(i); }
  AlignedBuffer& second_moment(std::size_t i) { return second_.at(i); }
  const AlignedBuffer& first_moment(std::size_t i) const { return first_.at(i); }
  const AlignedBuffer& second_moment(std::size_t i) const { return second_.at(i); }

  // Applies one update with the accumulated grads, then zeroes them.
  void step(double lr) {
    for (const auto* p : params_) {
      for (std::size_t i = 0; i < p->grad.size(); ++i) {
        if (!std::isfinite(p->grad[i])) {
          throw TrainingError("Adam: non-finite gradient in '" + p->name + "' at index " +
                              std::to_string(i) + " (step " + std::to_string(step_count_ + 1) + ")");
        }
      }
    }
    ++step_count_;
    const double t = static_cast<double>(step_count_);
    const double c1 = 1.0 - std::pow(config_.beta1, t);
    const double c2 = 1.0 - std::pow(config_.beta2, t);
    for (std::size_t k = 0; k < params_.size(); ++k) {
      auto* p = params_[k];
      auto& m = first_[k];
      auto& v = second_[k];
      for (std::size_t i = 0; i < p->size(); ++i) {
        const double g = p->grad[i];
        m[i] = config_.beta1 * m[i] + (1.0 - config_.beta1) * g;
        v[i] = config_.beta2 * v[i] + (1.0 - config_.beta2) * g * g;
        const double m_hat = m[i] / c1;
        const double v_hat = v[i] / c2;
        p->values[i] -= lr * m_hat / (std::sqrt(v_hat) + config_.eps);
      }
      p->zero_grad();
    }
  }

 private:
  ParamRefs params_;
  AdamConfig config_;
  std::vector<AlignedBuffer> first_;
  std::vector<AlignedBuffer> second_;
  std::uint64_t step_count_ = 0;
};

}  // namespace morl::numkit

#endif  // MORL_NUMKIT_ADAM_HPP_
