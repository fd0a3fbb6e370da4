#ifndef MORL_TRAINER_TRAINER_HPP_
#define MORL_TRAINER_TRAINER_HPP_

#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iomanip>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "json.hpp"
#include "morl/common/error.hpp"
#include "morl/common/rng.hpp"
#include "morl/env/planar_env.hpp"
#include "morl/numkit/adam.hpp"
#include "morl/numkit/checkpoint.hpp"
#include "morl/trainer/agent.hpp"
#include "morl/trainer/config.hpp"
#include "morl/trainer/ppo.hpp"
#include "morl/trainer/rollout.hpp"

namespace morl::trainer {

struct TrainerSetup {
  TrainConfig train;
  env::EnvConfig env;
  rewards::ComplianceModel reward;
  rewards::RegularizationCoefs regularization;
  std::uint64_t seed = 1;
};

inline obs::PrivilegedScaling scaling_for(const env::EnvConfig& c) {
  obs::PrivilegedScaling s;
  s.mass_nominal = c.mass;
  s.damping_linear_nominal = c.damping_linear;
  s.damping_angular_nominal = c.damping_angular;
  return s;
}

inline env::PreferenceMode preference_mode(Mode m) {
  return m == Mode::kMorl ? env::PreferenceMode::sampled()
                          : env::PreferenceMode::constant(fixed_preference(m));
}

inline nlohmann::json observation_layout_json(std::size_t history_length) {
  return {{"actor", obs::layout_to_json(obs::ActorObservation::layout())},
          {"privileged", obs::layout_to_json(obs::PrivilegedObservation::layout())},
          {"history_length", history_length}};
}

inline std::string hash_hex(std::uint64_t h) {
  std::ostringstream os;
  os << std::hex << std::setw(16) << std::setfill('0') << h;
  return os.str();
}

inline std::string config_hash(const nlohmann::json& config) {
  const std::string s = config.dump();
  return hash_hex(numkit::fnv1a64(s.data(), s.size()));
}

// One row of metrics.csv.
struct EpochMetrics {
  std::size_t epoch = 0;
  double total_reward = 0.0;
  double r_c_mean = 0.0;
  double r_f_mean = 0.0;
  double survival_steps = 0.0;
  double denoise_loss = 0.0;
  double denoise_force_loss = 0.0;
  UpdateStats update;

  static std::string csv_header() {
    return "epoch,total_reward,r_c_mean,r_f_mean,survival_steps,denoise_loss,denoise_force_loss";
  }
  std::string csv_row() const {
    char buf[256];
    std::snprintf(buf, sizeof buf, "%zu,%.17g,%.17g,%.17g,%.17g,%.17g,%.17g", epoch, total_reward,
                  r_c_mean, r_f_mean, survival_steps, denoise_loss, denoise_force_loss);
    return buf;
  }
};

// Owns agent, optimizer and environments. Not movable: the optimizer keeps
// pointers into the agent.
class Trainer {
 public:
  explicit Trainer(TrainerSetup setup, nlohmann::json config_snapshot = nlohmann::json::object())
      : setup_(std::move(setup)),
        snapshot_(std::move(config_snapshot)),
        scaling_(scaling_for(setup_.env)),
        env_(setup_.env, setup_.reward, setup_.regularization, preference_mode(setup_.train.mode)),
        agent_(setup_.train.arch, setup_.env.history_length),
        policy_rng_(make_rng(setup_.seed, Stream::kPolicy)),
        minibatch_rng_(make_rng(setup_.seed, Stream::kMinibatch)) {
    setup_.train.validate();
    Rng init = make_rng(setup_.seed, Stream::kInit);
    agent_.initialize(init, setup_.train.arch.actor_output_gain);
    optimizer_ = numkit::Adam(agent_.params());
    env_.set_phase(0.0);
    env_.reset(setup_.seed);
  }

  Trainer(const Trainer&) = delete;
  Trainer& operator=(const Trainer&) = delete;

  const TrainerSetup& setup() const { return setup_; }
  Agent& agent() { return agent_; }
  const Agent& agent() const { return agent_; }
  env::PlanarEnv& env() { return env_; }
  std::size_t epoch() const { return epoch_; }
  const obs::PrivilegedScaling& scaling() const { return scaling_; }

  double phase() const {
    return std::min(1.0, static_cast<double>(epoch_) / static_cast<double>(setup_.train.total_epochs));
  }

  EpochMetrics train_epoch() {
    env_.set_phase(phase());
    const RolloutBatch batch = collect_rollout(agent_, env_, setup_.train, policy_rng_, scaling_);
    const UpdateStats stats = ppo_update(agent_, optimizer_, batch, setup_.train, minibatch_rng_);

    EpochMetrics m;
    m.epoch = epoch_;
    const double n = static_cast<double>(batch.size());
    for (std::size_t k = 0; k < batch.size(); ++k) {
      m.total_reward += batch.scalar_rewards[k] / n;
      m.r_c_mean += batch.reward_vectors(0, static_cast<Eigen::Index>(k)) / n;
      m.r_f_mean += batch.reward_vectors(1, static_cast<Eigen::Index>(k)) / n;
    }
    if (!batch.finished_episode_lengths.empty()) {
      double sum = 0.0;
      for (auto len : batch.finished_episode_lengths) sum += static_cast<double>(len);
      survival_ = sum / static_cast<double>(batch.finished_episode_lengths.size());
    }
    m.survival_steps = survival_;
    m.denoise_loss = stats.denoise_loss;
    m.denoise_force_loss = stats.denoise_force_loss;
    m.update = stats;
    faults_ += batch.faults;
    ++epoch_;
    return m;
  }

  std::size_t faults() const { return faults_; }

  nlohmann::json manifest() const {
    nlohmann::json j;
    j["format"] = "morl-checkpoint";
    j["epoch"] = epoch_;
    j["seed"] = setup_.seed;
    j["mode"] = to_string(setup_.train.mode);
    j["config"] = snapshot_;
    j["config_hash"] = config_hash(snapshot_);
    j["observation_layout"] = observation_layout_json(setup_.env.history_length);
    j["parameter_counts"] = {{"encoder", agent_.encoder.parameter_count()},
                             {"decoder", agent_.decoder.parameter_count()},
                             {"actor", agent_.actor.parameter_count()},
                             {"critic", agent_.critic.parameter_count()},
                             {"log_std", agent_.head.action_dim()},
                             {"total", agent_.parameter_count()}};
    return j;
  }

  // Parameters, optimizer moments and, optionally, everything needed to
  // continue training bit-for-bit.
  numkit::Checkpoint make_checkpoint(bool include_state = true) {
    numkit::Checkpoint ckpt;
    ckpt.manifest = manifest();
    agent_.save(ckpt);
    ckpt.add_optimizer(optimizer_);
    if (include_state) {
      ckpt.manifest["trainer_state"] = {
          {"env", env_.export_state()},
          {"policy_rng", rng_state(policy_rng_)},
          {"minibatch_rng", rng_state(minibatch_rng_)},
          {"survival", survival_},
      };
    }
    return ckpt;
  }

  void restore(const numkit::Checkpoint& ckpt) {
    check_layout(ckpt.manifest, setup_.env.history_length);
    agent_.load(ckpt);
    ckpt.restore_optimizer(optimizer_);
    epoch_ = ckpt.manifest.at("epoch").get<std::size_t>();
    if (ckpt.manifest.contains("trainer_state")) {
      const auto& st = ckpt.manifest.at("trainer_state");
      env_.import_state(st.at("env"));
      restore_rng(policy_rng_, st.at("policy_rng").get<std::string>());
      restore_rng(minibatch_rng_, st.at("minibatch_rng").get<std::string>());
      survival_ = st.at("survival").get<double>();
    }
  }

  static void check_layout(const nlohmann::json& manifest, std::size_t history_length) {
    const auto expected = observation_layout_json(history_length);
    const auto& actual = manifest.at("observation_layout");
    if (actual != expected) {
      throw CheckpointError("observation layout mismatch:\n  checkpoint: " + actual.dump() +
                            "\n  build:      " + expected.dump());
    }
  }

 private:
  TrainerSetup setup_;
  nlohmann::json snapshot_;
  obs::PrivilegedScaling scaling_;
  env::PlanarEnv env_;
  Agent agent_;
  numkit::Adam optimizer_;
  Rng policy_rng_;
  Rng minibatch_rng_;
  std::size_t epoch_ = 0;
  double survival_ = 0.0;
  std::size_t faults_ = 0;
};

struct TrainResult {
  std::vector<EpochMetrics> metrics;
  std::filesystem::path final_checkpoint;
};

struct TrainOptions {
  std::optional<std::filesystem::path> run_dir;  // no files written when empty
  std::function<void(const EpochMetrics&)> on_epoch;
};

// Runs the remaining epochs of `trainer`, appending to metrics.csv and
// writing checkpoints/epoch_N.ckpt every checkpoint_interval epochs, at the
// end and (for a fresh run) at epoch 0. A numeric failure dumps
// checkpoints/last_good.ckpt and rethrows.
inline TrainResult run_training(Trainer& trainer, const TrainOptions& options = {}) {
  TrainResult result;
  const auto& cfg = trainer.setup().train;
  std::ofstream csv;
  std::filesystem::path ckpt_dir;
  if (options.run_dir) {
    ckpt_dir = *options.run_dir / "checkpoints";
    std::filesystem::create_directories(ckpt_dir);
    const auto csv_path = *options.run_dir / "metrics.csv";
    const bool fresh = trainer.epoch() == 0 || !std::filesystem::exists(csv_path);
    csv.open(csv_path, fresh ? std::ios::trunc : std::ios::app);
    if (!csv) throw ConfigError("cannot write " + csv_path.string());
    if (fresh) csv << EpochMetrics::csv_header() << "\n";
    if (trainer.epoch() == 0) {
      result.final_checkpoint = ckpt_dir / "epoch_0.ckpt";
      trainer.make_checkpoint(true).save(result.final_checkpoint);
    }
  }
  while (trainer.epoch() < cfg.total_epochs) {
    auto last_good = trainer.make_checkpoint(false);
    EpochMetrics m;
    try {
      m = trainer.train_epoch();
    } catch (const std::exception& e) {
      if (options.run_dir) last_good.save(ckpt_dir / "last_good.ckpt");
      throw TrainingError(std::string("training aborted at epoch ") + std::to_string(trainer.epoch()) +
                          ": " + e.what());
    }
    result.metrics.push_back(m);
    if (options.on_epoch) options.on_epoch(m);
    if (options.run_dir) {
      csv << m.csv_row() << "\n";
      const bool last = trainer.epoch() == cfg.total_epochs;
      if (last || (cfg.checkpoint_interval > 0 && trainer.epoch() % cfg.checkpoint_interval == 0)) {
        csv.flush();
        const auto path = ckpt_dir / ("epoch_" + std::to_string(trainer.epoch()) + ".ckpt");
        trainer.make_checkpoint(true).save(path);
        result.final_checkpoint = path;
      }
    }
  }
  return result;
}

}  // namespace morl::trainer

#endif  // MORL_TRAINER_TRAINER_HPP_
