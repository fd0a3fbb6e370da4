#ifndef MORL_TRAINER_CONFIG_HPP_
#define MORL_TRAINER_CONFIG_HPP_

#include <cstddef>
#include <string>
#include <vector>

#include "morl/common/error.hpp"
#include "morl/rewards/rewards.hpp"

namespace morl::trainer {

// morl: preference sampled per episode; sorl: fixed (1,1,1); baseline:
// fixed (2,0,1), i.e. no compliance objective.
enum class Mode { kMorl, kSorl, kBaseline };

inline const char* to_string(Mode m) {
  switch (m) {
    case Mode::kMorl: return "morl";
    case Mode::kSorl: return "sorl";
    case Mode::kBaseline: return "baseline";
  }
  return "?";
}

inline Mode mode_from_string(const std::string& s) {
  if (s == "morl") return Mode::kMorl;
  if (s == "sorl") return Mode::kSorl;
  if (s == "baseline") return Mode::kBaseline;
  throw ConfigError("unknown mode '" + s + "' (valid: morl, sorl, baseline)");
}

inline rewards::PreferenceVector fixed_preference(Mode m) {
  return m == Mode::kBaseline ? rewards::PreferenceVector{2.0, 0.0, 1.0}
                              : rewards::PreferenceVector{1.0, 1.0, 1.0};
}

struct ArchitectureConfig {
  std::vector<std::size_t> actor_hidden{256, 128};
  std::vector<std::size_t> critic_hidden{256, 128};
  std::vector<std::size_t> encoder_hidden{256, 64};
  std::vector<std::size_t> decoder_hidden{64};
  std::size_t latent_dim = 16;
  double init_log_std = -0.5;
  double actor_output_gain = 0.01;
};

struct TrainConfig {
  std::size_t total_epochs = 3000;
  std::size_t horizon = 24;
  double ppo_clip = 0.2;
  double gamma = 0.99;
  double gae_lambda = 0.95;
  double entropy_coef = 0.005;
  double value_coef = 1.0;
  double denoise_coef = 1.0;
  double force_denoise_coef = 1.0;
  double learning_rate = 3e-4;
  double max_grad_norm = 1.0;
  // Scales scalarized rewards before advantage estimation only; logged
  // rewards stay unscaled.
  double reward_scale = 0.05;
  std::size_t minibatches = 4;
  std::size_t ppo_epochs = 5;
  Mode mode = Mode::kMorl;
  std::size_t checkpoint_interval = 500;
  ArchitectureConfig arch;

  void validate() const {
    if (!(gamma > 0.0 && gamma < 1.0)) throw ConfigError("ppo.gamma must be in (0,1)");
    if (!(gae_lambda >= 0.0 && gae_lambda <= 1.0)) throw ConfigError("ppo.gae_lambda must be in [0,1]");
    if (!(ppo_clip > 0.0)) throw ConfigError("ppo.clip must be > 0");
    if (total_epochs == 0 || horizon == 0 || minibatches == 0 || ppo_epochs == 0) {
      throw ConfigError("ppo: epochs, horizon, minibatches, ppo_epochs must be >= 1");
    }
    if (!(learning_rate > 0.0)) throw ConfigError("ppo.learning_rate must be > 0");
    if (arch.latent_dim == 0) throw ConfigError("net.latent_dim must be >= 1");
  }
};

}  // namespace morl::trainer

#endif  // MORL_TRAINER_CONFIG_HPP_
