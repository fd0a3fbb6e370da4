#ifndef MORL_CLI_RUN_CONFIG_HPP_
#define MORL_CLI_RUN_CONFIG_HPP_

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <functional>
#include <sstream>
#include <string>
#include <type_traits>
#include <vector>

#include "json.hpp"
#include "morl/common/error.hpp"
#include "morl/evaluator/runner.hpp"
#include "morl/trainer/trainer.hpp"

namespace morl::cli {

using nlohmann::json;

// Everything that determines a run: training, environment, reward model,
// evaluation protocol and the master seed.
struct RunConfig {
  std::uint64_t seed = 1;
  trainer::TrainConfig train;
  env::EnvConfig env;
  rewards::ComplianceModel reward;
  rewards::RegularizationCoefs regularization;
  evaluator::EvalSettings eval;

  trainer::TrainerSetup trainer_setup() const { return {train, env, reward, regularization, seed}; }
  evaluator::EvalContext eval_context() const { return {env, reward, regularization, eval}; }

  void validate() const {
    train.validate();
    env.validate();
    reward.validate();
    eval.validate();
  }
};

namespace detail {

template <class T>
T convert(const json& j, const std::string& key) {
  const auto fail = [&](const char* what) {
    throw ConfigError("config key '" + key + "': expected " + what + ", got " + j.dump());
  };
  if constexpr (std::is_same_v<T, bool>) {
    if (!j.is_boolean()) fail("a boolean");
    return j.get<bool>();
  } else if constexpr (std::is_same_v<T, std::size_t> || std::is_same_v<T, std::uint64_t>) {
    if (!j.is_number_unsigned()) fail("a non-negative integer");
    return j.get<T>();
  } else if constexpr (std::is_same_v<T, double>) {
    if (!j.is_number()) fail("a number");
    return j.get<double>();
  } else if constexpr (std::is_same_v<T, std::vector<double>>) {
    if (!j.is_array()) fail("an array of numbers");
    std::vector<double> v;
    for (const auto& x : j) v.push_back(convert<double>(x, key));
    return v;
  } else if constexpr (std::is_same_v<T, std::vector<std::size_t>>) {
    if (!j.is_array()) fail("an array of non-negative integers");
    std::vector<std::size_t> v;
    for (const auto& x : j) v.push_back(convert<std::size_t>(x, key));
    return v;
  } else if constexpr (std::is_same_v<T, env::Range>) {
    if (!j.is_array() || j.size() != 2) fail("[low, high]");
    return env::Range{convert<double>(j[0], key), convert<double>(j[1], key)};
  } else if constexpr (std::is_same_v<T, trainer::Mode>) {
    if (!j.is_string()) fail("a mode string");
    return trainer::mode_from_string(j.get<std::string>());
  } else {
    static_assert(sizeof(T) == 0, "unsupported config type");
  }
}

template <class T>
json to_json_value(const T& v) {
  if constexpr (std::is_same_v<T, env::Range>) {
    return json::array({v.low, v.high});
  } else if constexpr (std::is_same_v<T, trainer::Mode>) {
    return trainer::to_string(v);
  } else {
    return json(v);
  }
}

}  // namespace detail

struct ConfigKey {
  std::string name;
  std::function<json(const RunConfig&)> get;
  std::function<void(RunConfig&, const json&)> set;
};

template <class Access>
ConfigKey bind_key(std::string name, Access access) {
  return {name,
          [access](const RunConfig& c) { return detail::to_json_value(access(const_cast<RunConfig&>(c))); },
          [access, name](RunConfig& c, const json& j) {
            auto& field = access(c);
            field = detail::convert<std::remove_reference_t<decltype(field)>>(j, name);
          }};
}

#define MORL_KEY(name, expr) bind_key(name, [](RunConfig& c) -> auto& { return expr; })

inline const std::vector<ConfigKey>& config_keys() {
  static const std::vector<ConfigKey> keys = {
      MORL_KEY("run.seed", c.seed),

      MORL_KEY("env.num_envs", c.env.num_envs),
      MORL_KEY("env.control_hz", c.env.control_hz),
      MORL_KEY("env.episode_length", c.env.episode_length),
      MORL_KEY("env.mass", c.env.mass),
      MORL_KEY("env.inertia", c.env.inertia),
      MORL_KEY("env.damping_linear", c.env.damping_linear),
      MORL_KEY("env.damping_angular", c.env.damping_angular),
      MORL_KEY("env.mass_range", c.env.mass_range),
      MORL_KEY("env.inertia_range", c.env.inertia_range),
      MORL_KEY("env.damping_linear_range", c.env.damping_linear_range),
      MORL_KEY("env.damping_angular_range", c.env.damping_angular_range),
      MORL_KEY("env.odometry_scale_range", c.env.odometry_scale_range),
      MORL_KEY("env.domain_randomization", c.env.domain_randomization),
      MORL_KEY("env.resample_wrench", c.env.resample_wrench),
      MORL_KEY("env.force_range", c.env.force_range),
      MORL_KEY("env.force_range_narrow", c.env.force_range_narrow),
      MORL_KEY("env.narrow_phase", c.env.narrow_phase),
      MORL_KEY("env.torque_range", c.env.torque_range),
      MORL_KEY("env.force_warmup_end", c.env.force_warmup_end),
      MORL_KEY("env.force_resample_period", c.env.force_resample_period),
      MORL_KEY("env.command_range_linear", c.env.command_range_linear),
      MORL_KEY("env.command_range_angular", c.env.command_range_angular),
      MORL_KEY("env.action_scale", c.env.action_scale),
      MORL_KEY("env.action_scale_angular", c.env.action_scale_angular),
      MORL_KEY("env.max_speed", c.env.max_speed),
      MORL_KEY("env.max_yaw_rate", c.env.max_yaw_rate),
      MORL_KEY("env.velocity_perturbation", c.env.velocity_perturbation),
      MORL_KEY("env.perturbation_max", c.env.perturbation_max),
      MORL_KEY("env.perturbation_interval", c.env.perturbation_interval),
      MORL_KEY("env.perturbation_ramp_end", c.env.perturbation_ramp_end),
      MORL_KEY("env.parameter_noise", c.env.parameter_noise),
      MORL_KEY("env.parameter_noise_scale", c.env.parameter_noise_scale),
      MORL_KEY("env.parameter_noise_phase", c.env.parameter_noise_phase),
      MORL_KEY("env.stagger_episodes", c.env.stagger_episodes),
      MORL_KEY("env.noise_omega", c.env.observation_noise.omega),
      MORL_KEY("env.noise_heading", c.env.observation_noise.heading),
      MORL_KEY("env.noise_odometry", c.env.observation_noise.odometry),
      MORL_KEY("env.noise_accel", c.env.observation_noise.accel),
      MORL_KEY("env.history_length", c.env.history_length),

      MORL_KEY("reward.k_lin", c.reward.k_lin),
      MORL_KEY("reward.k_ang", c.reward.k_ang),
      MORL_KEY("reward.sigma", c.reward.sigma),
      MORL_KEY("reward.angular_scale", c.reward.angular_scale),
      MORL_KEY("reward.effort", c.regularization.effort),
      MORL_KEY("reward.smoothness", c.regularization.smoothness),
      MORL_KEY("reward.spin", c.regularization.spin),

      MORL_KEY("ppo.mode", c.train.mode),
      MORL_KEY("ppo.total_epochs", c.train.total_epochs),
      MORL_KEY("ppo.horizon", c.train.horizon),
      MORL_KEY("ppo.clip", c.train.ppo_clip),
      MORL_KEY("ppo.gamma", c.train.gamma),
      MORL_KEY("ppo.gae_lambda", c.train.gae_lambda),
      MORL_KEY("ppo.entropy_coef", c.train.entropy_coef),
      MORL_KEY("ppo.value_coef", c.train.value_coef),
      MORL_KEY("ppo.denoise_coef", c.train.denoise_coef),
      MORL_KEY("ppo.force_denoise_coef", c.train.force_denoise_coef),
      MORL_KEY("ppo.learning_rate", c.train.learning_rate),
      MORL_KEY("ppo.max_grad_norm", c.train.max_grad_norm),
      MORL_KEY("ppo.reward_scale", c.train.reward_scale),
      MORL_KEY("ppo.minibatches", c.train.minibatches),
      MORL_KEY("ppo.ppo_epochs", c.train.ppo_epochs),
      MORL_KEY("ppo.checkpoint_interval", c.train.checkpoint_interval),

      MORL_KEY("net.actor_hidden", c.train.arch.actor_hidden),
      MORL_KEY("net.critic_hidden", c.train.arch.critic_hidden),
      MORL_KEY("net.encoder_hidden", c.train.arch.encoder_hidden),
      MORL_KEY("net.decoder_hidden", c.train.arch.decoder_hidden),
      MORL_KEY("net.latent_dim", c.train.arch.latent_dim),
      MORL_KEY("net.init_log_std", c.train.arch.init_log_std),
      MORL_KEY("net.actor_output_gain", c.train.arch.actor_output_gain),

      MORL_KEY("eval.seed", c.eval.seed),
      MORL_KEY("eval.observation_noise", c.eval.observation_noise),
      MORL_KEY("eval.trial_seconds", c.eval.trial_seconds),
      MORL_KEY("eval.settle_seconds", c.eval.settle_seconds),
      MORL_KEY("eval.sweep_points", c.eval.sweep_points),
      MORL_KEY("eval.command_speed", c.eval.command_speed),
      MORL_KEY("eval.command_yaw_rate", c.eval.command_yaw_rate),
      MORL_KEY("eval.force_levels", c.eval.force_levels),
      MORL_KEY("eval.torque_levels", c.eval.torque_levels),
      MORL_KEY("eval.orthogonal_force", c.eval.orthogonal_force),
      MORL_KEY("eval.switch_schedule", c.eval.switch_schedule),
      MORL_KEY("eval.switch_segment_seconds", c.eval.switch_segment_seconds),
      MORL_KEY("eval.switch_force", c.eval.switch_force),
      MORL_KEY("eval.switch_torque", c.eval.switch_torque),
      MORL_KEY("eval.switch_trials", c.eval.switch_trials),
      MORL_KEY("eval.convergence_band", c.eval.convergence_band),
      MORL_KEY("eval.responsiveness_fraction", c.eval.responsiveness_fraction),
      MORL_KEY("eval.responsiveness_seconds", c.eval.responsiveness_seconds),
      MORL_KEY("eval.perturb_trials", c.eval.perturb_trials),
      MORL_KEY("eval.perturb_magnitudes", c.eval.perturb_magnitudes),
      MORL_KEY("eval.perturb_seconds", c.eval.perturb_seconds),
      MORL_KEY("eval.perturb_period", c.eval.perturb_period),
      MORL_KEY("eval.perturb_duration", c.eval.perturb_duration),
      MORL_KEY("eval.perturb_offset", c.eval.perturb_offset),
  };
  return keys;
}

#undef MORL_KEY

inline std::string valid_keys_message() {
  std::ostringstream os;
  os << "valid keys:";
  for (const auto& k : config_keys()) os << "\n  " << k.name;
  return os.str();
}

inline json to_json(const RunConfig& c) {
  json j = json::object();
  for (const auto& k : config_keys()) j[k.name] = k.get(c);
  return j;
}

// Applies a flat key/value object on top of `base`. Unknown keys are errors.
inline RunConfig apply_overrides(RunConfig base, const json& flat) {
  if (!flat.is_object()) throw ConfigError("config must be a JSON object of flat keys");
  for (const auto& [name, value] : flat.items()) {
    const auto& keys = config_keys();
    auto it = std::find_if(keys.begin(), keys.end(), [&](const ConfigKey& k) { return k.name == name; });
    if (it == keys.end()) throw ConfigError("unknown config key '" + name + "'\n" + valid_keys_message());
    it->set(base, value);
  }
  base.validate();
  return base;
}

inline RunConfig from_json(const json& flat) { return apply_overrides(RunConfig{}, flat); }

inline RunConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot read config file: " + path.string());
  json j;
  try {
    in >> j;
  } catch (const json::parse_error& e) {
    throw ConfigError("config file " + path.string() + " is not valid JSON: " + e.what());
  }
  return from_json(j);
}

}  // namespace morl::cli

#endif  // MORL_CLI_RUN_CONFIG_HPP_
