#ifndef MORL_TRAINER_GAE_HPP_
#define MORL_TRAINER_GAE_HPP_

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include "morl/common/error.hpp"

namespace morl::trainer {

struct GaeResult {
  std::vector<double> advantages;
  std::vector<double> returns;
};

// Generalized advantage estimation over a (horizon x num_envs) block stored
// time-major: index = t * num_envs + env. `dones[k]` cuts bootstrapping
// after step k; `last_values` are V(s_H) per env.
//   delta_t = r_t + gamma * V_{t+1} * (1 - d_t) - V_t
//   A_t     = delta_t + gamma * lambda * (1 - d_t) * A_{t+1}
inline GaeResult compute_gae(std::span<const double> rewards, std::span<const double> values,
                             std::span<const std::uint8_t> dones, std::span<const double> last_values,
                             std::size_t num_envs, double gamma, double lambda) {
  if (num_envs == 0 || rewards.size() % num_envs != 0 || values.size() != rewards.size() ||
      dones.size() != rewards.size() || last_values.size() != num_envs) {
    throw ConfigError("compute_gae: inconsistent batch dimensions");
  }
  const std::size_t horizon = rewards.size() / num_envs;
  GaeResult out;
  out.advantages.assign(rewards.size(), 0.0);
  out.returns.assign(rewards.size(), 0.0);
  std::vector<double> next_adv(num_envs, 0.0);
  std::vector<double> next_value(last_values.begin(), last_values.end());
  for (std::size_t t = horizon; t-- > 0;) {
    for (std::size_t i = 0; i < num_envs; ++i) {
      const std::size_t k = t * num_envs + i;
      const double not_done = dones[k] ? 0.0 : 1.0;
      const double delta = rewards[k] + gamma * next_value[i] * not_done - values[k];
      const double adv = delta + gamma * lambda * not_done * next_adv[i];
      out.advantages[k] = adv;
      out.returns[k] = adv + values[k];
      next_adv[i] = adv;
      next_value[i] = values[k];
    }
  }
  return out;
}

}  // namespace morl::trainer

#endif  // MORL_TRAINER_GAE_HPP_
