#ifndef MORL_EVALUATOR_RUNNER_HPP_
#define MORL_EVALUATOR_RUNNER_HPP_

#include <Eigen/Dense>

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "morl/common/error.hpp"
#include "morl/env/planar_env.hpp"
#include "morl/env/trajectory.hpp"
#include "morl/trainer/agent.hpp"

namespace morl::evaluator {

using numkit::Matrix;
using rewards::PreferenceVector;

// A trained agent acting deterministically. A policy trained without the
// compliance objective sees constant preference channels regardless of the
// preference used for scoring.
struct Policy {
  const trainer::Agent* agent = nullptr;
  std::string label;
  std::optional<PreferenceVector> fixed_preference;

  static Policy conditioned(const trainer::Agent& a, std::string label) { return {&a, std::move(label), {}}; }
  static Policy fixed(const trainer::Agent& a, std::string label, PreferenceVector w) {
    return {&a, std::move(label), w};
  }
};

struct EvalSettings {
  std::uint64_t seed = 2024;
  bool observation_noise = true;

  double trial_seconds = 5.0;
  double settle_seconds = 0.0;  // samples before this are left out of the MSEs
  std::size_t sweep_points = 21;
  double command_speed = 1.0;
  double command_yaw_rate = 1.0;
  std::vector<double> force_levels{10.0, 20.0, 30.0};
  std::vector<double> torque_levels{3.0, 5.0, 7.0};
  double orthogonal_force = 30.0;

  std::vector<double> switch_schedule{2.0, 0.0, 2.0};
  double switch_segment_seconds = 4.0;
  double switch_force = 20.0;
  double switch_torque = 5.0;
  std::size_t switch_trials = 10;
  double convergence_band = 0.1;
  double responsiveness_fraction = 0.3;
  double responsiveness_seconds = 2.0;

  std::size_t perturb_trials = 20;
  std::vector<double> perturb_magnitudes{30.0, 40.0, 50.0};
  double perturb_seconds = 20.0;
  double perturb_period = 5.0;
  double perturb_duration = 1.0;
  double perturb_offset = 2.0;

  void validate() const {
    if (!(trial_seconds > 0.0)) throw ConfigError("eval.trial_seconds must be > 0");
    if (!(settle_seconds >= 0.0 && settle_seconds < trial_seconds)) {
      throw ConfigError("eval.settle_seconds must be in [0, eval.trial_seconds)");
    }
    if (sweep_points < 2) throw ConfigError("eval.sweep_points must be >= 2");
    if (switch_schedule.empty()) throw ConfigError("eval.switch_schedule must not be empty");
    for (double w : switch_schedule) {
      if (!(w >= 0.0 && w <= rewards::kPreferenceSum)) throw ConfigError("eval.switch_schedule: w_c must be in [0,2]");
    }
    if (!(switch_segment_seconds > 0.0)) throw ConfigError("eval.switch_segment_seconds must be > 0");
    if (switch_trials == 0 || perturb_trials == 0) throw ConfigError("eval: trial counts must be >= 1");
    if (!(perturb_seconds > 0.0 && perturb_period > 0.0 && perturb_duration >= 0.0)) {
      throw ConfigError("eval: invalid perturbation timing");
    }
    for (double m : perturb_magnitudes) {
      if (!(m >= 0.0)) throw ConfigError("eval.perturb_magnitudes must be >= 0");
    }
  }
};

// Everything needed to build evaluation environments.
struct EvalContext {
  env::EnvConfig env;
  rewards::ComplianceModel reward;
  rewards::RegularizationCoefs regularization;
  EvalSettings settings;
};

// Nominal body, no randomization, no curriculum disturbances. The episode is
// one step longer than the trial so no automatic reset happens inside it.
inline env::EnvConfig evaluation_env_config(const EvalContext& ctx, std::size_t trials, double seconds) {
  env::EnvConfig c = ctx.env;
  c.num_envs = trials;
  c.domain_randomization = false;
  c.resample_wrench = false;
  c.velocity_perturbation = false;
  c.parameter_noise = false;
  c.stagger_episodes = false;
  c.impulse_schedule.reset();
  c.episode_length = seconds + 2.0 / c.control_hz;
  if (!ctx.settings.observation_noise) c.observation_noise = {0.0, 0.0, 0.0, 0.0};
  return c;
}

inline std::size_t steps_for(const env::EnvConfig& c, double seconds) {
  return static_cast<std::size_t>(std::llround(seconds * c.control_hz));
}

// Deterministic actions for every env, clamped like the environment does.
inline Matrix policy_actions(const Policy& policy, env::PlanarEnv& env) {
  if (policy.agent == nullptr) throw UsageError("policy has no agent");
  const auto n = static_cast<Eigen::Index>(env.num_envs());
  const auto d = static_cast<Eigen::Index>(obs::ActorObservation::dim());
  const auto hist_len = static_cast<Eigen::Index>(env.config().history_length);
  Matrix o(d, n);
  Matrix h(d * hist_len, n);
  for (Eigen::Index i = 0; i < n; ++i) {
    const auto idx = static_cast<std::size_t>(i);
    o.col(i) = env.observe(idx).actor_obs.to_vector();
    env.history(idx).write_flat(h.col(i).data());
  }
  if (policy.fixed_preference) {
    const auto& w = *policy.fixed_preference;
    for (Eigen::Index i = 0; i < n; ++i) {
      o.col(i).head<3>() << w.w_c, w.w_f, w.w_r;
      for (Eigen::Index k = 0; k < hist_len; ++k) h.col(i).segment<3>(k * d) << w.w_c, w.w_f, w.w_r;
    }
  }
  return policy.agent->action_mean(o, h).cwiseMax(-1.0).cwiseMin(1.0);
}

// Per-env record of one evaluation batch. velocities[k] is the body twist
// after step k; samples stop at the first termination.
struct TrialLog {
  std::vector<env::Twist> velocities;
  std::vector<env::Action> actions;
  std::vector<env::Wrench> wrenches;
  bool failed = false;
  std::size_t failed_step = 0;
};

// Runs `steps` control steps. `before_step(k)` may change the scenario.
template <class BeforeStep>
std::vector<TrialLog> run_trials(const Policy& policy, env::PlanarEnv& env, std::size_t steps,
                                 BeforeStep before_step, env::TrajectoryRecorder* recorder = nullptr) {
  const std::size_t n = env.num_envs();
  std::vector<TrialLog> logs(n);
  const double dt = env.config().dt();
  for (std::size_t k = 0; k < steps; ++k) {
    before_step(k);
    std::vector<env::Wrench> wrench(n);
    std::vector<env::VelocityCommand> command(n);
    for (std::size_t i = 0; i < n; ++i) {
      wrench[i] = env.active_wrench(i);
      command[i] = env.command(i);
    }
    const Matrix a = policy_actions(policy, env);
    const auto results = env.step(a);
    for (std::size_t i = 0; i < n; ++i) {
      auto& log = logs[i];
      if (log.failed) continue;
      const auto& r = results[i];
      const env::Action act{a(0, static_cast<Eigen::Index>(i)), a(1, static_cast<Eigen::Index>(i)),
                            a(2, static_cast<Eigen::Index>(i))};
      if (r.terminated) {
        log.failed = true;
        log.failed_step = k;
      } else {
        log.velocities.push_back(env.body(i).twist());
        log.actions.push_back(act);
        log.wrenches.push_back(wrench[i]);
      }
      if (recorder != nullptr) {
        env::TrajectorySample s;
        s.env_id = i;
        s.t = static_cast<double>(k + 1) * dt;
        s.velocity = r.terminated ? env::Twist{} : env.body(i).twist();
        s.command = command[i];
        s.wrench = wrench[i];
        s.preference = r.preference;
        s.reward = r.reward;
        s.action = act;
        s.terminated = r.terminated;
        recorder->record(s);
      }
    }
  }
  return logs;
}

}  // namespace morl::evaluator

#endif  // MORL_EVALUATOR_RUNNER_HPP_
