#ifndef MORL_TRAINER_PPO_HPP_
#define MORL_TRAINER_PPO_HPP_

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <numeric>
#include <vector>

#include "morl/common/error.hpp"
#include "morl/common/rng.hpp"
#include "morl/numkit/adam.hpp"
#include "morl/observations/observations.hpp"
#include "morl/trainer/agent.hpp"
#include "morl/trainer/config.hpp"
#include "morl/trainer/rollout.hpp"

namespace morl::trainer {

// Per-sample clipped surrogate min(r*A, clip(r, 1-eps, 1+eps)*A).
inline double clipped_surrogate(double ratio, double advantage, double clip) {
  return std::min(ratio * advantage, std::clamp(ratio, 1.0 - clip, 1.0 + clip) * advantage);
}

// d clipped_surrogate / d ratio (zero when the clipped branch is active).
inline double clipped_surrogate_grad(double ratio, double advantage, double clip) {
  const double unclipped = ratio * advantage;
  const double clipped = std::clamp(ratio, 1.0 - clip, 1.0 + clip) * advantage;
  return unclipped <= clipped ? advantage : 0.0;
}

struct DenoiseLoss {
  double reconstruction = 0.0;  // mean ||o^p_hat - o^p||^2
  double force = 0.0;           // mean ||wrench_hat - wrench||^2
  Matrix grad;                  // d(total)/d(prediction), total as below
};

// total = denoise_coef * reconstruction + force_coef * force
inline DenoiseLoss denoise_loss(const Matrix& prediction, const Matrix& target, double denoise_coef,
                                double force_coef) {
  if (prediction.rows() != target.rows() || prediction.cols() != target.cols() || target.cols() == 0) {
    throw ConfigError("denoise_loss: shape mismatch");
  }
  const double b = static_cast<double>(target.cols());
  const Matrix diff = prediction - target;
  constexpr Eigen::Index kOff = obs::PrivilegedObservation::kForceOffset;
  DenoiseLoss out;
  out.reconstruction = diff.squaredNorm() / b;
  out.force = diff.middleRows(kOff, 3).squaredNorm() / b;
  out.grad = (2.0 * denoise_coef / b) * diff;
  out.grad.middleRows(kOff, 3) += (2.0 * force_coef / b) * diff.middleRows(kOff, 3);
  return out;
}

struct UpdateStats {
  double policy_loss = 0.0;
  double value_loss = 0.0;
  double entropy = 0.0;
  double denoise_loss = 0.0;
  double denoise_force_loss = 0.0;
  double approx_kl = 0.0;
  double clip_fraction = 0.0;
  double grad_norm = 0.0;
  std::size_t minibatch_updates = 0;
};

// Which objectives contribute gradients; used to isolate gradient paths.
struct ObjectiveMask {
  bool actor = true;
  bool critic = true;
  bool entropy = true;
  bool denoise = true;
};

inline Matrix gather(const Matrix& m, const std::vector<Eigen::Index>& idx) { return m(Eigen::all, idx); }

// Accumulates gradients of the combined loss over one minibatch into the
// agent's grad fields. `advantages` must already be normalized.
inline UpdateStats accumulate_gradients(Agent& agent, const RolloutBatch& batch,
                                        const std::vector<double>& advantages,
                                        const std::vector<Eigen::Index>& idx, const TrainConfig& config,
                                        const ObjectiveMask& mask = {}) {
  const auto b = static_cast<Eigen::Index>(idx.size());
  const double inv_b = 1.0 / static_cast<double>(b);
  const Matrix o = gather(batch.obs, idx);
  const Matrix h = gather(batch.history, idx);
  const Matrix p = gather(batch.privileged, idx);
  const Matrix a = gather(batch.actions, idx);

  numkit::MlpTape enc_tape;
  numkit::MlpTape act_tape;
  numkit::MlpTape dec_tape;
  numkit::MlpTape crit_tape;
  const Matrix z = agent.encoder.forward(h, enc_tape);
  const Matrix mean = agent.actor.forward(Agent::actor_input(o, z, Agent::preference_rows(o)), act_tape);
  const Matrix recon = agent.decoder.forward(z, dec_tape);
  const Matrix v = agent.critic.forward(Agent::critic_input(o, p), crit_tape);

  UpdateStats s;
  Matrix d_mean = Matrix::Zero(mean.rows(), b);
  Vector d_log_std = Vector::Zero(mean.rows());
  Matrix d_value(1, b);
  for (Eigen::Index j = 0; j < b; ++j) {
    const auto k = idx[static_cast<std::size_t>(j)];
    const double logp = agent.head.log_prob(mean.col(j), a.col(j));
    const double old = batch.logprob[k];
    const double ratio = std::exp(logp - old);
    const double adv = advantages[static_cast<std::size_t>(k)];
    s.policy_loss -= clipped_surrogate(ratio, adv, config.ppo_clip) * inv_b;
    s.approx_kl += (old - logp) * inv_b;
    if (std::abs(ratio - 1.0) > config.ppo_clip) s.clip_fraction += inv_b;
    if (mask.actor) {
      // d(-surrogate)/d(logp) = -grad_ratio * ratio
      const double g = -clipped_surrogate_grad(ratio, adv, config.ppo_clip) * ratio * inv_b;
      d_mean.col(j) = g * agent.head.log_prob_grad_mean(mean.col(j), a.col(j));
      d_log_std += g * agent.head.log_prob_grad_log_std(mean.col(j), a.col(j));
    }
    const double err = v(0, j) - batch.returns[static_cast<std::size_t>(k)];
    s.value_loss += err * err * inv_b;
    d_value(0, j) = mask.critic ? config.value_coef * 2.0 * err * inv_b : 0.0;
  }
  s.entropy = agent.head.entropy();
  if (mask.entropy) d_log_std -= config.entropy_coef * agent.head.entropy_grad_log_std();

  const auto den = denoise_loss(recon, p, config.denoise_coef, config.force_denoise_coef);
  s.denoise_loss = den.reconstruction;
  s.denoise_force_loss = den.force;

  if (mask.critic) agent.critic.backward(crit_tape, d_value);
  Matrix d_z = Matrix::Zero(z.rows(), b);
  if (mask.actor) {
    const Matrix d_in = agent.actor.backward(act_tape, d_mean);
    d_z += d_in.middleRows(static_cast<Eigen::Index>(agent.obs_dim), z.rows());
    auto& g = agent.head.log_std().grad;
    for (std::size_t i = 0; i < g.size(); ++i) g[i] += d_log_std[static_cast<Eigen::Index>(i)];
  } else if (mask.entropy) {
    auto& g = agent.head.log_std().grad;
    for (std::size_t i = 0; i < g.size(); ++i) g[i] += d_log_std[static_cast<Eigen::Index>(i)];
  }
  if (mask.denoise) d_z += agent.decoder.backward(dec_tape, den.grad);
  if (mask.actor || mask.denoise) agent.encoder.backward(enc_tape, d_z);
  return s;
}

// Batch-wise advantage normalization to zero mean and unit std.
inline std::vector<double> normalize_advantages(const std::vector<double>& adv) {
  const double n = static_cast<double>(adv.size());
  const double mean = std::accumulate(adv.begin(), adv.end(), 0.0) / n;
  double var = 0.0;
  for (double x : adv) var += (x - mean) * (x - mean);
  const double std = std::sqrt(var / n);
  std::vector<double> out(adv.size());
  for (std::size_t i = 0; i < adv.size(); ++i) out[i] = (adv[i] - mean) / (std + 1e-8);
  return out;
}

// Clipped-surrogate PPO with value and entropy terms plus the denoising
// reconstruction losses, all in one optimizer step per minibatch.
inline UpdateStats ppo_update(Agent& agent, numkit::Adam& optimizer, const RolloutBatch& batch,
                              const TrainConfig& config, Rng& minibatch_rng) {
  const std::vector<double> adv = normalize_advantages(batch.advantages);
  const std::size_t n = batch.size();
  const std::size_t mb = std::max<std::size_t>(1, n / config.minibatches);
  std::vector<Eigen::Index> perm(n);
  UpdateStats total;
  auto params = agent.params();
  for (std::size_t epoch = 0; epoch < config.ppo_epochs; ++epoch) {
    std::iota(perm.begin(), perm.end(), Eigen::Index{0});
    for (std::size_t i = n; i > 1; --i) {
      std::swap(perm[i - 1], perm[static_cast<std::size_t>(minibatch_rng() % i)]);
    }
    for (std::size_t start = 0; start + mb <= n; start += mb) {
      std::vector<Eigen::Index> idx(perm.begin() + static_cast<std::ptrdiff_t>(start),
                                    perm.begin() + static_cast<std::ptrdiff_t>(start + mb));
      const auto s = accumulate_gradients(agent, batch, adv, idx, config);
      if (!std::isfinite(s.policy_loss) || !std::isfinite(s.value_loss) || !std::isfinite(s.denoise_loss)) {
        throw TrainingError("non-finite loss during PPO update");
      }
      total.grad_norm += numkit::clip_grad_norm(params, config.max_grad_norm);
      optimizer.step(config.learning_rate);
      agent.head.clamp();
      total.policy_loss += s.policy_loss;
      total.value_loss += s.value_loss;
      total.entropy += s.entropy;
      total.denoise_loss += s.denoise_loss;
      total.denoise_force_loss += s.denoise_force_loss;
      total.approx_kl += s.approx_kl;
      total.clip_fraction += s.clip_fraction;
      ++total.minibatch_updates;
    }
  }
  const double u = static_cast<double>(std::max<std::size_t>(1, total.minibatch_updates));
  total.policy_loss /= u;
  total.value_loss /= u;
  total.entropy /= u;
  total.denoise_loss /= u;
  total.denoise_force_loss /= u;
  total.approx_kl /= u;
  total.clip_fraction /= u;
  total.grad_norm /= u;
  return total;
}

}  // namespace morl::trainer

#endif  // MORL_TRAINER_PPO_HPP_
