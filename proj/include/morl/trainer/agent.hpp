#ifndef MORL_TRAINER_AGENT_HPP_
#define MORL_TRAINER_AGENT_HPP_

#include <Eigen/Dense>

#include <cstddef>
#include <string>

#include "morl/common/rng.hpp"
#include "morl/numkit/checkpoint.hpp"
#include "morl/numkit/gaussian.hpp"
#include "morl/numkit/mlp.hpp"
#include "morl/observations/observations.hpp"
#include "morl/trainer/config.hpp"

namespace morl::trainer {

using numkit::Matrix;
using numkit::Vector;

// Encoder/decoder plus asymmetric actor-critic.
//   encoder: stacked actor history -> latent z
//   decoder: z -> privileged features
//   actor:   (o, z, w) -> action mean
//   critic:  (o, o^p) -> value
struct Agent {
  std::size_t obs_dim = 0;
  std::size_t history_dim = 0;
  std::size_t privileged_dim = 0;
  std::size_t latent_dim = 0;
  numkit::Mlp encoder;
  numkit::Mlp decoder;
  numkit::Mlp actor;
  numkit::Mlp critic;
  numkit::GaussianPolicyHead head;

  Agent() = default;
  Agent(const ArchitectureConfig& arch, std::size_t history_length)
      : obs_dim(obs::ActorObservation::dim()),
        history_dim(history_length * obs::ActorObservation::dim()),
        privileged_dim(obs::PrivilegedObservation::dim()),
        latent_dim(arch.latent_dim),
        encoder("encoder", {history_dim, arch.encoder_hidden, latent_dim, numkit::Activation::kElu}),
        decoder("decoder", {latent_dim, arch.decoder_hidden, privileged_dim, numkit::Activation::kElu}),
        actor("actor", {obs_dim + latent_dim + 3, arch.actor_hidden, obs::kActionDim,
                        numkit::Activation::kTanh}),
        critic("critic", {obs_dim + privileged_dim, arch.critic_hidden, 1, numkit::Activation::kTanh}),
        head("actor", obs::kActionDim, arch.init_log_std) {}

  void initialize(Rng& rng, double actor_output_gain) {
    encoder.init_orthogonal(rng, 1.0, 1.0);
    decoder.init_orthogonal(rng, 1.0, 1.0);
    actor.init_orthogonal(rng, 1.0, actor_output_gain);
    critic.init_orthogonal(rng, 1.0, 1.0);
  }

  numkit::ParamRefs params() {
    numkit::ParamRefs refs;
    for (auto* net : {&encoder, &decoder, &actor, &critic}) {
      for (auto* p : net->params()) refs.push_back(p);
    }
    refs.push_back(&head.log_std());
    return refs;
  }

  std::size_t parameter_count() const {
    return encoder.parameter_count() + decoder.parameter_count() + actor.parameter_count() +
           critic.parameter_count() + head.action_dim();
  }

  // Actor input [o; z; w]; the preference rows of o are passed again as w.
  static Matrix actor_input(const Matrix& obs, const Matrix& latent, const Matrix& preference) {
    Matrix in(obs.rows() + latent.rows() + preference.rows(), obs.cols());
    in << obs, latent, preference;
    return in;
  }

  static Matrix critic_input(const Matrix& obs, const Matrix& privileged) {
    Matrix in(obs.rows() + privileged.rows(), obs.cols());
    in << obs, privileged;
    return in;
  }

  static Matrix preference_rows(const Matrix& obs) { return obs.topRows(3); }

  Matrix action_mean(const Matrix& obs, const Matrix& histories) const {
    const Matrix z = encoder.forward(histories);
    return actor.forward(actor_input(obs, z, preference_rows(obs)));
  }

  Matrix value(const Matrix& obs, const Matrix& privileged_features) const {
    return critic.forward(critic_input(obs, privileged_features));
  }

  Matrix reconstruct(const Matrix& histories) const { return decoder.forward(encoder.forward(histories)); }

  void save(numkit::Checkpoint& ckpt) {
    for (auto* p : params()) ckpt.add(*p);
  }

  void load(const numkit::Checkpoint& ckpt) {
    for (auto* p : params()) ckpt.restore(*p);
  }
};

}  // namespace morl::trainer

#endif  // MORL_TRAINER_AGENT_HPP_
