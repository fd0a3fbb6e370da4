#ifndef MORL_EVALUATOR_EXPERIMENTS_HPP_
#define MORL_EVALUATOR_EXPERIMENTS_HPP_

#include <array>
#include <cmath>
#include <limits>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "morl/evaluator/pareto.hpp"
#include "morl/evaluator/runner.hpp"
#include "morl/trainer/trainer.hpp"

namespace morl::evaluator {

enum class SweepSetting { kOpposite, kOrthogonal, kAngular };

inline const char* to_string(SweepSetting s) {
  switch (s) {
    case SweepSetting::kOpposite: return "opposite";
    case SweepSetting::kOrthogonal: return "orthogonal";
    case SweepSetting::kAngular: return "angular";
  }
  return "?";
}

struct ParetoRecord {
  double w_c = 0.0;
  double level = 0.0;  // force magnitude (N) or torque (N*m)
  double tracking_mse = 0.0;
  double compliance_mse = 0.0;
  bool non_dominated = false;
  bool failed = false;
  std::array<double, 3> mean_velocity{};
};

// w_c grid over [0, 2] with `points` entries.
inline std::vector<double> preference_grid(std::size_t points) {
  std::vector<double> w(points);
  for (std::size_t i = 0; i < points; ++i) {
    w[i] = rewards::kPreferenceSum * static_cast<double>(i) / static_cast<double>(points - 1);
  }
  return w;
}

// Flags dominance among the records that did not fail.
inline void mark_non_dominated(std::vector<ParetoRecord>& records) {
  std::vector<ObjectivePoint> pts;
  std::vector<std::size_t> idx;
  for (std::size_t i = 0; i < records.size(); ++i) {
    records[i].non_dominated = false;
    if (!records[i].failed) {
      pts.push_back({records[i].tracking_mse, records[i].compliance_mse});
      idx.push_back(i);
    }
  }
  if (pts.empty()) return;
  const auto flags = non_dominated_filter(pts);
  for (std::size_t j = 0; j < idx.size(); ++j) records[idx[j]].non_dominated = flags[j];
}

struct SweepScenario {
  env::VelocityCommand command;
  env::Wrench wrench;
  rewards::Channels channels = rewards::Channels::kLinear;
};

inline SweepScenario sweep_scenario(SweepSetting s, double level, const EvalSettings& es) {
  SweepScenario sc;
  switch (s) {
    case SweepSetting::kOpposite:
      sc.command.vx = es.command_speed;
      sc.wrench.fx = -level;
      break;
    case SweepSetting::kOrthogonal:
      sc.command.vx = es.command_speed;
      sc.wrench.fy = level;  // +y is the body's left
      break;
    case SweepSetting::kAngular:
      sc.command.omega = es.command_yaw_rate;
      sc.wrench.tau = -level;
      sc.channels = rewards::Channels::kAngular;
      break;
  }
  return sc;
}

// One sweep of `sweep_points` preferences at a single force or torque level.
inline std::vector<ParetoRecord> sweep_level(const Policy& policy, const EvalContext& ctx, SweepSetting setting,
                                             double level, env::TrajectoryRecorder* recorder = nullptr) {
  const auto& es = ctx.settings;
  const auto grid = preference_grid(es.sweep_points);
  const auto cfg = evaluation_env_config(ctx, grid.size(), es.trial_seconds);
  env::PlanarEnv env(cfg, ctx.reward, ctx.regularization);
  env.reset(es.seed);
  const SweepScenario sc = sweep_scenario(setting, level, es);
  for (std::size_t i = 0; i < grid.size(); ++i) {
    env.set_command(i, sc.command);
    env.set_wrench(i, sc.wrench);
    env.set_preference(i, {grid[i], rewards::kPreferenceSum - grid[i], 1.0});
  }
  const auto logs = run_trials(policy, env, steps_for(cfg, es.trial_seconds), [](std::size_t) {}, recorder);
  const auto skip = steps_for(cfg, es.settle_seconds);

  std::vector<ParetoRecord> out(grid.size());
  for (std::size_t i = 0; i < grid.size(); ++i) {
    auto& r = out[i];
    r.w_c = grid[i];
    r.level = level;
    r.failed = logs[i].failed;
    if (r.failed) {
      r.tracking_mse = r.compliance_mse = std::numeric_limits<double>::quiet_NaN();
      continue;
    }
    std::span<const env::Twist> v(logs[i].velocities);
    v = v.subspan(std::min(skip, v.size() - 1));
    const auto m = rewards::mse_metrics(v, sc.command, sc.wrench, ctx.reward, sc.channels);
    r.tracking_mse = m.tracking;
    r.compliance_mse = m.compliance;
    for (const auto& t : v) {
      r.mean_velocity[0] += t.vx / static_cast<double>(v.size());
      r.mean_velocity[1] += t.vy / static_cast<double>(v.size());
      r.mean_velocity[2] += t.omega / static_cast<double>(v.size());
    }
  }
  mark_non_dominated(out);
  return out;
}

// Linear-channel sweep: forward command against a backward force (opposite)
// or a leftward force (orthogonal), one sweep per level.
inline std::vector<ParetoRecord> pareto_sweep(const Policy& policy, const EvalContext& ctx, SweepSetting setting,
                                              const std::vector<double>& levels,
                                              env::TrajectoryRecorder* recorder = nullptr) {
  if (setting == SweepSetting::kAngular) throw UsageError("pareto_sweep: use angular_sweep for the yaw channel");
  std::vector<ParetoRecord> out;
  for (double level : levels) {
    auto part = sweep_level(policy, ctx, setting, level, recorder);
    out.insert(out.end(), part.begin(), part.end());
  }
  return out;
}

// Yaw-channel sweep: yaw-rate command against an opposing torque.
inline std::vector<ParetoRecord> angular_sweep(const Policy& policy, const EvalContext& ctx,
                                               const std::vector<double>& torque_levels,
                                               env::TrajectoryRecorder* recorder = nullptr) {
  std::vector<ParetoRecord> out;
  for (double level : torque_levels) {
    auto part = sweep_level(policy, ctx, SweepSetting::kAngular, level, recorder);
    out.insert(out.end(), part.begin(), part.end());
  }
  return out;
}

struct SweepSummary {
  double spearman_tracking = 0.0;
  double spearman_compliance = 0.0;
  double non_dominated_fraction = 0.0;
  std::size_t failed = 0;
};

// Statistics over the records of one level.
inline SweepSummary summarize_sweep(const std::vector<ParetoRecord>& records) {
  SweepSummary s;
  std::vector<double> w, tr, co;
  std::size_t nd = 0;
  for (const auto& r : records) {
    if (r.failed) {
      ++s.failed;
      continue;
    }
    w.push_back(r.w_c);
    tr.push_back(r.tracking_mse);
    co.push_back(r.compliance_mse);
    if (r.non_dominated) ++nd;
  }
  if (w.size() >= 2) {
    s.spearman_tracking = spearman(w, tr);
    s.spearman_compliance = spearman(w, co);
  } else {
    s.spearman_tracking = s.spearman_compliance = std::numeric_limits<double>::quiet_NaN();
  }
  s.non_dominated_fraction = records.empty() ? 0.0 : static_cast<double>(nd) / static_cast<double>(records.size());
  return s;
}

// ---- preference switching ----

enum class SwitchChannel { kLinear, kAngular };

struct SwitchTrace {
  std::vector<double> t;       // sample times; t[0] = 0 is the initial state
  std::vector<double> w_c;     // preference in effect for the step ending at t
  std::vector<double> velocity;
  std::vector<double> target;
  std::vector<double> boundaries;  // segment start times
  std::vector<double> convergence_times;     // NaN when the band is never held
  std::vector<double> responsiveness_times;  // NaN when never below the fraction
  std::vector<double> initial_errors;
  bool failed = false;
};

// Time after `start` from which |err| stays within band * err[start] until
// `end` (exclusive), NaN if the final sample is outside the band.
inline double convergence_time(const std::vector<double>& t, const std::vector<double>& err, std::size_t start,
                               std::size_t end, double band) {
  if (start >= end || end > err.size()) throw EvaluationError("convergence_time: empty segment");
  const double limit = band * std::abs(err[start]);
  std::size_t k = end;
  while (k > start && std::abs(err[k - 1]) <= limit) --k;
  if (k == end) return std::numeric_limits<double>::quiet_NaN();
  return t[k] - t[start];
}

// First time after `start` at which |err| drops below fraction * err[start].
inline double responsiveness_time(const std::vector<double>& t, const std::vector<double>& err, std::size_t start,
                                  std::size_t end, double fraction) {
  const double limit = fraction * std::abs(err[start]);
  for (std::size_t k = start; k < end; ++k) {
    if (std::abs(err[k]) < limit) return t[k] - t[start];
  }
  return std::numeric_limits<double>::quiet_NaN();
}

// Segment target blends command and force-equivalent velocity by preference.
inline double switch_target(double w_c, SwitchChannel ch, const EvalSettings& es, const rewards::ComplianceModel& m) {
  const double w_f = rewards::kPreferenceSum - w_c;
  const double cmd = ch == SwitchChannel::kLinear ? es.command_speed : es.command_yaw_rate;
  const double comp = ch == SwitchChannel::kLinear ? -m.k_lin * es.switch_force : -m.k_ang * es.switch_torque;
  return (w_c * cmd + w_f * comp) / rewards::kPreferenceSum;
}

// Constant command against a constant opposing wrench while w_c follows the
// schedule, one segment per entry. One trace per trial.
inline std::vector<SwitchTrace> preference_switch_eval(const Policy& policy, const EvalContext& ctx,
                                                       SwitchChannel channel,
                                                       env::TrajectoryRecorder* recorder = nullptr) {
  const auto& es = ctx.settings;
  const double total = es.switch_segment_seconds * static_cast<double>(es.switch_schedule.size());
  const auto cfg = evaluation_env_config(ctx, es.switch_trials, total);
  const std::size_t seg_steps = steps_for(cfg, es.switch_segment_seconds);
  const std::size_t steps = seg_steps * es.switch_schedule.size();
  env::PlanarEnv env(cfg, ctx.reward, ctx.regularization);
  env.reset(es.seed);

  env::VelocityCommand cmd;
  env::Wrench wrench;
  if (channel == SwitchChannel::kLinear) {
    cmd.vx = es.command_speed;
    wrench.fx = -es.switch_force;
  } else {
    cmd.omega = es.command_yaw_rate;
    wrench.tau = -es.switch_torque;
  }
  const auto pref_at = [&](std::size_t k) {
    const double w = es.switch_schedule[std::min(k / seg_steps, es.switch_schedule.size() - 1)];
    return PreferenceVector{w, rewards::kPreferenceSum - w, 1.0};
  };
  for (std::size_t i = 0; i < env.num_envs(); ++i) {
    env.set_command(i, cmd);
    env.set_wrench(i, wrench);
    env.set_preference(i, pref_at(0));
  }
  const auto logs = run_trials(
      policy, env, steps,
      [&](std::size_t k) {
        if (k > 0 && k % seg_steps == 0) {
          for (std::size_t i = 0; i < env.num_envs(); ++i) env.set_preference(i, pref_at(k));
        }
      },
      recorder);

  const double dt = cfg.dt();
  std::vector<SwitchTrace> traces(logs.size());
  for (std::size_t i = 0; i < logs.size(); ++i) {
    auto& tr = traces[i];
    tr.failed = logs[i].failed;
    const auto value = [&](const env::Twist& v) { return channel == SwitchChannel::kLinear ? v.vx : v.omega; };
    tr.t.push_back(0.0);
    tr.w_c.push_back(pref_at(0).w_c);
    tr.velocity.push_back(0.0);
    tr.target.push_back(switch_target(pref_at(0).w_c, channel, es, ctx.reward));
    for (std::size_t k = 0; k < logs[i].velocities.size(); ++k) {
      const double w = pref_at(k).w_c;
      tr.t.push_back(static_cast<double>(k + 1) * dt);
      tr.w_c.push_back(w);
      tr.velocity.push_back(value(logs[i].velocities[k]));
      tr.target.push_back(switch_target(w, channel, es, ctx.reward));
    }
    for (std::size_t s = 0; s < es.switch_schedule.size(); ++s) tr.boundaries.push_back(static_cast<double>(s * seg_steps) * dt);
    if (tr.failed) continue;
    for (std::size_t s = 0; s < es.switch_schedule.size(); ++s) {
      const std::size_t start = s * seg_steps;
      const std::size_t end = start + seg_steps + 1;
      const double target = switch_target(es.switch_schedule[s], channel, es, ctx.reward);
      std::vector<double> err(tr.velocity.size());
      for (std::size_t k = 0; k < err.size(); ++k) err[k] = tr.velocity[k] - target;
      tr.initial_errors.push_back(std::abs(err[start]));
      tr.convergence_times.push_back(convergence_time(tr.t, err, start, end, es.convergence_band));
      tr.responsiveness_times.push_back(responsiveness_time(tr.t, err, start, end, es.responsiveness_fraction));
    }
  }
  return traces;
}

// ---- impulse perturbation ----

struct PerturbationCase {
  Policy policy;
  PreferenceVector preference;
};

struct PerturbationReport {
  std::string label;
  double magnitude = 0.0;
  std::size_t trials = 0;
  std::size_t successes = 0;
  double success_rate = 0.0;
  std::optional<double> peak_effort_mean;  // absent when nothing succeeded
  std::optional<double> peak_effort_std;
  std::vector<bool> success;
  std::vector<double> peak_effort;  // per trial, NaN for failed trials
};

// Max over action channels of the time-RMS of the action.
inline double peak_rms_effort(const std::vector<env::Action>& actions) {
  if (actions.empty()) return 0.0;
  double peak = 0.0;
  for (std::size_t c = 0; c < obs::kActionDim; ++c) {
    double s = 0.0;
    for (const auto& a : actions) s += a[c] * a[c];
    peak = std::max(peak, std::sqrt(s / static_cast<double>(actions.size())));
  }
  return peak;
}

// Zero command, no steady wrench, random-direction impulses on a fixed
// schedule. Impulse directions depend only on the seed and trial index, so
// every policy faces the same sequence.
inline PerturbationReport perturbation_trial_set(const PerturbationCase& pc, const EvalContext& ctx, double magnitude,
                                                 std::size_t trials, env::TrajectoryRecorder* recorder = nullptr) {
  const auto& es = ctx.settings;
  auto cfg = evaluation_env_config(ctx, trials, es.perturb_seconds);
  cfg.impulse_schedule = env::ImpulseSchedule{es.perturb_period, es.perturb_duration, magnitude, es.perturb_offset};
  env::PlanarEnv env(cfg, ctx.reward, ctx.regularization);
  env.reset(es.seed);
  for (std::size_t i = 0; i < trials; ++i) {
    env.set_command(i, {});
    env.set_wrench(i, {});
    env.set_preference(i, pc.preference);
  }
  const auto logs = run_trials(pc.policy, env, steps_for(cfg, es.perturb_seconds), [](std::size_t) {}, recorder);

  PerturbationReport rep;
  rep.label = pc.policy.label;
  rep.magnitude = magnitude;
  rep.trials = trials;
  std::vector<double> ok;
  for (const auto& log : logs) {
    rep.success.push_back(!log.failed);
    if (log.failed) {
      rep.peak_effort.push_back(std::numeric_limits<double>::quiet_NaN());
    } else {
      ++rep.successes;
      rep.peak_effort.push_back(peak_rms_effort(log.actions));
      ok.push_back(rep.peak_effort.back());
    }
  }
  rep.success_rate = static_cast<double>(rep.successes) / static_cast<double>(trials);
  if (!ok.empty()) {
    double mean = 0.0;
    for (double x : ok) mean += x / static_cast<double>(ok.size());
    double var = 0.0;
    for (double x : ok) var += (x - mean) * (x - mean);
    rep.peak_effort_mean = mean;
    rep.peak_effort_std = ok.size() > 1 ? std::sqrt(var / static_cast<double>(ok.size() - 1)) : 0.0;
  }
  return rep;
}

inline std::vector<PerturbationReport> perturbation_eval(const std::vector<PerturbationCase>& cases,
                                                         const EvalContext& ctx,
                                                         const std::vector<double>& magnitudes, std::size_t trials) {
  if (trials == 0) throw ConfigError("perturbation_eval: trials must be >= 1");
  std::vector<PerturbationReport> out;
  for (const auto& c : cases) {
    for (double m : magnitudes) out.push_back(perturbation_trial_set(c, ctx, m, trials));
  }
  return out;
}

// ---- baseline ----

// Same pipeline with the compliance weight forced to zero and constant
// preference channels.
inline std::unique_ptr<trainer::Trainer> train_baseline(trainer::TrainerSetup setup,
                                                        const trainer::TrainOptions& options = {},
                                                        nlohmann::json config_snapshot = nlohmann::json::object()) {
  setup.train.mode = trainer::Mode::kBaseline;
  if (config_snapshot.is_object() && !config_snapshot.empty()) config_snapshot["ppo.mode"] = "baseline";
  auto t = std::make_unique<trainer::Trainer>(std::move(setup), std::move(config_snapshot));
  trainer::run_training(*t, options);
  return t;
}

}  // namespace morl::evaluator

#endif  // MORL_EVALUATOR_EXPERIMENTS_HPP_
