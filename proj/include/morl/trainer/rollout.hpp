#ifndef MORL_TRAINER_ROLLOUT_HPP_
#define MORL_TRAINER_ROLLOUT_HPP_

#include <Eigen/Dense>

#include <cstddef>
#include <cstdint>
#include <vector>

#include "morl/common/rng.hpp"
#include "morl/env/planar_env.hpp"
#include "morl/observations/observations.hpp"
#include "morl/rewards/rewards.hpp"
#include "morl/trainer/agent.hpp"
#include "morl/trainer/config.hpp"
#include "morl/trainer/gae.hpp"

namespace morl::trainer {

// Transitions for (horizon x num_envs) steps, time-major columns:
// column k = t * num_envs + env.
struct RolloutBatch {
  std::size_t num_envs = 0;
  std::size_t horizon = 0;
  Matrix obs;         // actor observations
  Matrix history;     // flattened observation histories (encoder input)
  Matrix privileged;  // normalized privileged features (critic input, denoising target)
  Matrix actions;     // sampled, pre-clamp
  Vector logprob;
  Vector value;
  Matrix reward_vectors;  // rows r_c, r_f, r_r
  std::vector<rewards::PreferenceVector> preferences;
  std::vector<double> scalar_rewards;  // scalarize(reward_vector, preference)
  std::vector<double> gae_rewards;     // scaled, with time-limit bootstrap folded in
  std::vector<std::uint8_t> dones;
  std::vector<std::uint8_t> terminated;
  std::vector<std::uint8_t> truncated;
  std::vector<double> last_values;
  std::vector<double> advantages;
  std::vector<double> returns;
  std::vector<std::size_t> finished_episode_lengths;
  std::size_t faults = 0;

  std::size_t size() const { return num_envs * horizon; }

  void allocate(std::size_t envs, std::size_t steps, std::size_t obs_dim, std::size_t history_dim,
                std::size_t privileged_dim) {
    num_envs = envs;
    horizon = steps;
    const auto n = static_cast<Eigen::Index>(envs * steps);
    obs.resize(static_cast<Eigen::Index>(obs_dim), n);
    history.resize(static_cast<Eigen::Index>(history_dim), n);
    privileged.resize(static_cast<Eigen::Index>(privileged_dim), n);
    actions.resize(static_cast<Eigen::Index>(obs::kActionDim), n);
    logprob.resize(n);
    value.resize(n);
    reward_vectors.resize(3, n);
    preferences.assign(size(), {});
    scalar_rewards.assign(size(), 0.0);
    gae_rewards.assign(size(), 0.0);
    dones.assign(size(), 0);
    terminated.assign(size(), 0);
    truncated.assign(size(), 0);
    last_values.assign(envs, 0.0);
    finished_episode_lengths.clear();
    faults = 0;
  }
};

// Current observations of every env as network-ready matrices.
struct EnvView {
  Matrix obs;
  Matrix history;
  Matrix privileged;
};

inline EnvView view_env(env::PlanarEnv& env, const obs::PrivilegedScaling& scaling) {
  const auto n = static_cast<Eigen::Index>(env.num_envs());
  EnvView v;
  v.obs.resize(static_cast<Eigen::Index>(obs::ActorObservation::dim()), n);
  v.history.resize(static_cast<Eigen::Index>(env.history_dim()), n);
  v.privileged.resize(static_cast<Eigen::Index>(obs::PrivilegedObservation::dim()), n);
  for (Eigen::Index i = 0; i < n; ++i) {
    const auto r = env.observe(static_cast<std::size_t>(i));
    v.obs.col(i) = r.actor_obs.to_vector();
    env.history(static_cast<std::size_t>(i)).write_flat(v.history.col(i).data());
    v.privileged.col(i) = r.privileged_obs.features(scaling);
  }
  return v;
}

// Runs `horizon` vectorized steps. The actor sees (o_t, z_t, w_t), the critic
// (o_t, o^p_t). With `deterministic` the action is the policy mean.
inline RolloutBatch collect_rollout(Agent& agent, env::PlanarEnv& env, const TrainConfig& config,
                                    Rng& policy_rng, const obs::PrivilegedScaling& scaling,
                                    bool deterministic = false) {
  const std::size_t n = env.num_envs();
  RolloutBatch batch;
  batch.allocate(n, config.horizon, agent.obs_dim, agent.history_dim, agent.privileged_dim);

  EnvView view = view_env(env, scaling);
  Matrix actions(static_cast<Eigen::Index>(obs::kActionDim), static_cast<Eigen::Index>(n));
  for (std::size_t t = 0; t < config.horizon; ++t) {
    const Matrix mean = agent.action_mean(view.obs, view.history);
    const Matrix values = agent.value(view.obs, view.privileged);
    for (std::size_t i = 0; i < n; ++i) {
      const auto c = static_cast<Eigen::Index>(i);
      const Vector a = deterministic ? Vector(mean.col(c)) : agent.head.sample(mean.col(c), policy_rng);
      actions.col(c) = a;
      const auto k = static_cast<Eigen::Index>(t * n + i);
      batch.logprob[k] = agent.head.log_prob(mean.col(c), a);
      batch.value[k] = values(0, c);
    }
    const auto cols = Eigen::seqN(static_cast<Eigen::Index>(t * n), static_cast<Eigen::Index>(n));
    batch.obs(Eigen::all, cols) = view.obs;
    batch.history(Eigen::all, cols) = view.history;
    batch.privileged(Eigen::all, cols) = view.privileged;
    batch.actions(Eigen::all, cols) = actions;

    const auto results = env.step(actions);

    // Time-limit bootstrap: V of the final pre-reset state.
    std::vector<std::size_t> cut;
    for (std::size_t i = 0; i < n; ++i) {
      if (results[i].truncated) cut.push_back(i);
    }
    Vector final_values;
    if (!cut.empty()) {
      Matrix fo(static_cast<Eigen::Index>(agent.obs_dim), static_cast<Eigen::Index>(cut.size()));
      Matrix fp(static_cast<Eigen::Index>(agent.privileged_dim), static_cast<Eigen::Index>(cut.size()));
      for (std::size_t j = 0; j < cut.size(); ++j) {
        fo.col(static_cast<Eigen::Index>(j)) = results[cut[j]].final_actor_obs->to_vector();
        fp.col(static_cast<Eigen::Index>(j)) = results[cut[j]].final_privileged_obs->features(scaling);
      }
      final_values = agent.value(fo, fp).row(0).transpose();
    }

    std::size_t next_cut = 0;
    for (std::size_t i = 0; i < n; ++i) {
      const auto& r = results[i];
      const std::size_t k = t * n + i;
      batch.reward_vectors.col(static_cast<Eigen::Index>(k)) << r.reward.r_c, r.reward.r_f, r.reward.r_r;
      batch.preferences[k] = r.preference;
      batch.scalar_rewards[k] = rewards::scalarize(r.reward, r.preference);
      batch.gae_rewards[k] = config.reward_scale * batch.scalar_rewards[k];
      if (r.truncated) batch.gae_rewards[k] += config.gamma * final_values[static_cast<Eigen::Index>(next_cut++)];
      batch.terminated[k] = r.terminated ? 1 : 0;
      batch.truncated[k] = r.truncated ? 1 : 0;
      batch.dones[k] = r.done() ? 1 : 0;
      if (r.fault) ++batch.faults;
      if (r.done()) batch.finished_episode_lengths.push_back(r.episode_steps);
    }
    view = view_env(env, scaling);
  }
  const Matrix last = agent.value(view.obs, view.privileged);
  for (std::size_t i = 0; i < n; ++i) batch.last_values[i] = last(0, static_cast<Eigen::Index>(i));

  auto gae = compute_gae(batch.gae_rewards, {batch.value.data(), batch.size()}, batch.dones,
                         batch.last_values, n, config.gamma, config.gae_lambda);
  batch.advantages = std::move(gae.advantages);
  batch.returns = std::move(gae.returns);
  return batch;
}

}  // namespace morl::trainer

#endif  // MORL_TRAINER_ROLLOUT_HPP_
