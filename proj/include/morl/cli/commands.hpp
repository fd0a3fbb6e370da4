#ifndef MORL_CLI_COMMANDS_HPP_
#define MORL_CLI_COMMANDS_HPP_

#include <chrono>
#include <cstdlib>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "morl/cli/run_config.hpp"
#include "morl/evaluator/report.hpp"

namespace morl::cli {

namespace fs = std::filesystem;

inline constexpr const char* kOutputRootVar = "MORL_OUTPUT_ROOT";
inline const std::vector<std::string> kExperiments{"pareto", "angular", "switch", "perturb"};

inline fs::path output_root(const std::optional<fs::path>& explicit_root) {
  if (explicit_root) return *explicit_root;
  if (const char* v = std::getenv(kOutputRootVar); v != nullptr && *v != '\0') return v;
  return "runs";
}

inline std::string timestamp() {
  const auto now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  localtime_r(&now, &tm);
  std::ostringstream os;
  os << std::put_time(&tm, "%Y%m%d-%H%M%S");
  return os.str();
}

inline void write_json(const fs::path& path, const json& j) {
  std::ofstream out(path);
  if (!out) throw ConfigError("cannot write " + path.string());
  out << j.dump(2) << "\n";
}

// ---- train ----

struct TrainArgs {
  fs::path config;
  std::optional<std::string> mode;
  std::optional<std::uint64_t> seed;
  std::optional<std::size_t> epochs;
  std::optional<std::size_t> envs;
  std::optional<fs::path> run_dir;      // exact directory, overrides the timestamped one
  std::optional<fs::path> output_root;  // parent of timestamped run directories
  std::optional<fs::path> resume;       // checkpoint to continue from
  std::size_t log_every = 50;
};

inline RunConfig resolve_train_config(const TrainArgs& a) {
  RunConfig cfg = load_config(a.config);
  json overrides = json::object();
  if (a.mode) overrides["ppo.mode"] = *a.mode;
  if (a.seed) overrides["run.seed"] = *a.seed;
  if (a.epochs) overrides["ppo.total_epochs"] = *a.epochs;
  if (a.envs) overrides["env.num_envs"] = *a.envs;
  return apply_overrides(cfg, overrides);
}

inline int cmd_train(const TrainArgs& a, std::ostream& out = std::cout) {
  RunConfig cfg;
  fs::path dir;
  std::optional<numkit::Checkpoint> resume;
  if (a.resume) {
    resume = numkit::Checkpoint::load(*a.resume);
    cfg = apply_overrides(RunConfig{}, resume->manifest.at("config"));
    if (a.epochs) cfg.train.total_epochs = *a.epochs;
    dir = a.run_dir ? *a.run_dir : a.resume->parent_path().parent_path();
  } else {
    cfg = resolve_train_config(a);
    dir = a.run_dir ? *a.run_dir
                    : output_root(a.output_root) / (timestamp() + "_" + trainer::to_string(cfg.train.mode) + "_s" +
                                                    std::to_string(cfg.seed));
  }
  fs::create_directories(dir);
  const json snapshot = to_json(cfg);
  write_json(dir / "config.snapshot", snapshot);

  trainer::Trainer t(cfg.trainer_setup(), snapshot);
  if (resume) t.restore(*resume);
  out << "run directory: " << dir.string() << "\n"
      << "mode " << trainer::to_string(cfg.train.mode) << ", seed " << cfg.seed << ", " << cfg.env.num_envs
      << " envs, epochs " << t.epoch() << ".." << cfg.train.total_epochs << "\n";
  trainer::TrainOptions opts;
  opts.run_dir = dir;
  opts.on_epoch = [&](const trainer::EpochMetrics& m) {
    if (a.log_every > 0 && (m.epoch % a.log_every == 0 || m.epoch + 1 == cfg.train.total_epochs)) {
      out << "epoch " << m.epoch << "  reward " << m.total_reward << "  r_c " << m.r_c_mean << "  r_f " << m.r_f_mean
          << "  survival " << m.survival_steps << "  denoise " << m.denoise_loss << "  force "
          << m.denoise_force_loss << std::endl;
    }
  };
  const auto result = trainer::run_training(t, opts);
  if (t.faults() > 0) out << "environment faults: " << t.faults() << "\n";
  out << "final checkpoint: " << result.final_checkpoint.string() << "\n";
  return 0;
}

// ---- checkpoint loading ----

struct LoadedPolicy {
  RunConfig config;
  json manifest;
  trainer::Agent agent;
  trainer::Mode mode = trainer::Mode::kMorl;

  evaluator::Policy policy(const std::string& label) const {
    if (mode == trainer::Mode::kMorl) return evaluator::Policy::conditioned(agent, label);
    return evaluator::Policy::fixed(agent, label, trainer::fixed_preference(mode));
  }
};

inline std::unique_ptr<LoadedPolicy> load_policy(const fs::path& path) {
  const auto ckpt = numkit::Checkpoint::load(path);
  auto p = std::make_unique<LoadedPolicy>();
  p->manifest = ckpt.manifest;
  p->config = apply_overrides(RunConfig{}, ckpt.manifest.at("config"));
  trainer::Trainer::check_layout(ckpt.manifest, p->config.env.history_length);
  p->mode = p->config.train.mode;
  p->agent = trainer::Agent(p->config.train.arch, p->config.env.history_length);
  p->agent.load(ckpt);
  return p;
}

// ---- eval ----

struct EvalArgs {
  fs::path checkpoint;
  std::string experiment;
  std::optional<double> force;
  std::optional<double> torque;
  std::optional<double> wc;
  std::optional<std::size_t> trials;
  std::optional<fs::path> baseline_checkpoint;
  std::string setting = "opposite";  // pareto: opposite | orthogonal
  std::string channel = "linear";    // switch: linear | angular
  std::optional<fs::path> out_dir;
  bool trajectory = false;
};

inline fs::path eval_dir(const EvalArgs& a) {
  if (a.out_dir) return *a.out_dir;
  return a.checkpoint.parent_path().parent_path() / "eval";
}

inline int cmd_eval(const EvalArgs& a, std::ostream& out = std::cout, std::ostream& err = std::cerr) {
  if (std::find(kExperiments.begin(), kExperiments.end(), a.experiment) == kExperiments.end()) {
    err << "unknown experiment '" << a.experiment << "'; valid experiments: pareto, angular, switch, perturb\n";
    return 2;
  }
  std::unique_ptr<LoadedPolicy> lp;
  try {
    lp = load_policy(a.checkpoint);
  } catch (const CheckpointError& e) {
    err << "refusing to evaluate " << a.checkpoint.string() << ": " << e.what() << "\n";
    return 1;
  }
  auto ctx = lp->config.eval_context();
  auto& es = ctx.settings;
  const fs::path dir = eval_dir(a);
  fs::create_directories(dir);

  std::string stem = a.experiment;
  if (a.experiment == "pareto" && a.setting != "opposite") stem += "_" + a.setting;
  if (a.experiment == "switch" && a.channel != "linear") stem += "_" + a.channel;
  std::ofstream traj_file;
  std::optional<env::TrajectoryRecorder> recorder;
  if (a.trajectory) {
    traj_file.open(dir / (stem + "_trajectory.csv"));
    recorder.emplace(traj_file);
  }
  env::TrajectoryRecorder* rec = recorder ? &*recorder : nullptr;
  const auto policy = lp->policy(trainer::to_string(lp->mode));
  std::ofstream csv(dir / (stem + ".csv"));
  if (!csv) throw ConfigError("cannot write " + (dir / (stem + ".csv")).string());
  json summary;

  if (a.experiment == "pareto" || a.experiment == "angular") {
    std::vector<evaluator::ParetoRecord> records;
    evaluator::SweepSetting setting = evaluator::SweepSetting::kAngular;
    if (a.experiment == "pareto") {
      if (a.setting == "opposite") {
        setting = evaluator::SweepSetting::kOpposite;
      } else if (a.setting == "orthogonal") {
        setting = evaluator::SweepSetting::kOrthogonal;
      } else {
        err << "unknown pareto setting '" << a.setting << "'; valid settings: opposite, orthogonal\n";
        return 2;
      }
      std::vector<double> levels = setting == evaluator::SweepSetting::kOpposite
                                       ? es.force_levels
                                       : std::vector<double>{es.orthogonal_force};
      if (a.force) levels = {*a.force};
      records = evaluator::pareto_sweep(policy, ctx, setting, levels, rec);
    } else {
      const std::vector<double> levels = a.torque ? std::vector<double>{*a.torque} : es.torque_levels;
      records = evaluator::angular_sweep(policy, ctx, levels, rec);
    }
    evaluator::write_sweep_csv(csv, records, setting);
    summary = evaluator::sweep_summary_json(records);
    summary["setting"] = evaluator::to_string(setting);
  } else if (a.experiment == "switch") {
    evaluator::SwitchChannel ch;
    if (a.channel == "linear") {
      ch = evaluator::SwitchChannel::kLinear;
    } else if (a.channel == "angular") {
      ch = evaluator::SwitchChannel::kAngular;
    } else {
      err << "unknown switch channel '" << a.channel << "'; valid channels: linear, angular\n";
      return 2;
    }
    if (a.force) es.switch_force = *a.force;
    if (a.torque) es.switch_torque = *a.torque;
    if (a.trials) es.switch_trials = *a.trials;
    es.validate();
    const auto traces = evaluator::preference_switch_eval(policy, ctx, ch, rec);
    evaluator::write_switch_csv(csv, traces);
    summary = evaluator::switch_summary_json(traces, es);
    summary["channel"] = a.channel;
  } else {
    const std::size_t trials = a.trials ? *a.trials : es.perturb_trials;
    const std::vector<double> mags = a.force ? std::vector<double>{*a.force} : es.perturb_magnitudes;
    std::vector<evaluator::PerturbationCase> cases;
    if (lp->mode != trainer::Mode::kMorl) {
      cases.push_back({policy, trainer::fixed_preference(lp->mode)});
    } else if (a.wc) {
      if (!(*a.wc >= 0.0 && *a.wc <= rewards::kPreferenceSum)) {
        err << "--wc must be in [0, 2]\n";
        return 2;
      }
      cases.push_back({lp->policy("morl_wc" + evaluator::detail::num(*a.wc)), {*a.wc, 2.0 - *a.wc, 1.0}});
    } else {
      cases.push_back({lp->policy("compliant"), {0.0, 2.0, 1.0}});
      cases.push_back({lp->policy("mid"), {1.0, 1.0, 1.0}});
      cases.push_back({lp->policy("tracking"), {2.0, 0.0, 1.0}});
    }
    std::unique_ptr<LoadedPolicy> base;
    if (a.baseline_checkpoint) {
      base = load_policy(*a.baseline_checkpoint);
      cases.push_back({base->policy("baseline"), trainer::fixed_preference(trainer::Mode::kBaseline)});
    }
    std::vector<evaluator::PerturbationReport> reports;
    for (const auto& c : cases) {
      for (double m : mags) reports.push_back(evaluator::perturbation_trial_set(c, ctx, m, trials, rec));
    }
    evaluator::write_perturbation_csv(csv, reports);
    summary = evaluator::perturbation_summary_json(reports);
  }
  summary["experiment"] = a.experiment;
  summary["checkpoint"] = a.checkpoint.string();
  summary["epoch"] = lp->manifest.at("epoch");
  write_json(dir / (stem + "_summary.json"), summary);
  out << summary.dump(2) << "\n";
  return 0;
}

// ---- inspect ----

inline int cmd_inspect(const fs::path& path, std::ostream& out = std::cout, std::ostream& err = std::cerr) {
  if (!fs::exists(path)) {
    err << "checkpoint not found: " << path.string() << "\n";
    return 1;
  }
  numkit::Checkpoint ckpt;
  try {
    ckpt = numkit::Checkpoint::load(path);
  } catch (const CheckpointError& e) {
    err << "cannot read " << path.string() << ": " << e.what() << "\n";
    return 1;
  }
  const auto& m = ckpt.manifest;
  json view = {{"epoch", m.at("epoch")},
               {"mode", m.value("mode", "")},
               {"seed", m.value("seed", json())},
               {"config_hash", m.value("config_hash", "")},
               {"parameter_counts", m.value("parameter_counts", json::object())},
               {"observation_layout", m.value("observation_layout", json::object())},
               {"tensors", ckpt.tensors.size()},
               {"resumable", m.contains("trainer_state")}};
  out << view.dump(2) << "\n";
  return 0;
}

}  // namespace morl::cli

#endif  // MORL_CLI_COMMANDS_HPP_
