#ifndef MORL_ENV_PLANAR_ENV_HPP_
#define MORL_ENV_PLANAR_ENV_HPP_

#include <Eigen/Dense>

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <numbers>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "json.hpp"
#include "morl/common/error.hpp"
#include "morl/common/rng.hpp"
#include "morl/env/types.hpp"
#include "morl/observations/observations.hpp"
#include "morl/rewards/rewards.hpp"

namespace morl::env {

using rewards::PreferenceVector;
using rewards::RewardVector;
using Action = std::array<double, obs::kActionDim>;

struct Range {
  double low = 0.0;
  double high = 0.0;

  bool valid() const { return std::isfinite(low) && std::isfinite(high) && low <= high; }
  bool contains(double v) const { return v >= low && v <= high; }
  double sample(Rng& rng) const { return low == high ? low : uniform(rng, low, high); }
};

struct ImpulseSchedule {
  double period = 5.0;     // s between impulse starts
  double duration = 1.0;   // s
  double magnitude = 30.0; // N
  double offset = 2.0;     // s from episode start to the first impulse
};

struct EnvConfig {
  std::size_t num_envs = 64;
  double control_hz = 50.0;
  double episode_length = 20.0;  // s

  // Nominal body; randomization ranges are absolute.
  double mass = 30.0;
  double inertia = 2.0;
  double damping_linear = 25.0;
  double damping_angular = 5.0;
  Range mass_range{27.0, 33.0};
  Range inertia_range{1.8, 2.2};
  Range damping_linear_range{22.5, 27.5};
  Range damping_angular_range{4.5, 5.5};
  Range odometry_scale_range{0.95, 1.05};
  bool domain_randomization = true;

  // External wrench schedule.
  bool resample_wrench = true;
  double force_range = 50.0;        // +-N per component before narrowing
  double force_range_narrow = 20.0; // +-N per component after narrowing
  double narrow_phase = 0.5;
  double torque_range = 7.0;        // +-N*m
  // Wrenches fade in linearly until this phase; 0 applies them in full from the start.
  double force_warmup_end = 0.1;
  double force_resample_period = 30.0;
  std::optional<ImpulseSchedule> impulse_schedule;

  // Commands drawn once per episode.
  double command_range_linear = 1.0;
  double command_range_angular = 1.0;

  double action_scale = 3.0;          // m/s^2 at |action| = 1
  double action_scale_angular = 6.0;  // rad/s^2 at |action| = 1

  double max_speed = 5.0;
  double max_yaw_rate = 10.0;

  // Curriculum.
  bool velocity_perturbation = true;
  double perturbation_max = 0.5;       // m/s
  double perturbation_interval = 4.0;  // s
  double perturbation_ramp_end = 0.5;  // phase at which the ramp tops out
  bool parameter_noise = true;         // stands in for the terrain switch
  double parameter_noise_scale = 0.05; // relative, per step
  double parameter_noise_phase = 0.5;

  bool stagger_episodes = true;

  obs::ObservationNoise observation_noise;
  std::size_t history_length = 10;

  double dt() const { return 1.0 / control_hz; }
  std::size_t episode_steps() const {
    return static_cast<std::size_t>(std::llround(episode_length * control_hz));
  }

  void validate() const {
    if (num_envs == 0) throw ConfigError("env.num_envs must be >= 1");
    if (!(control_hz > 0.0)) throw ConfigError("env.control_hz must be > 0");
    if (!(episode_length > 0.0)) throw ConfigError("env.episode_length must be > 0");
    if (!(mass > 0.0 && inertia > 0.0 && damping_linear > 0.0 && damping_angular > 0.0)) {
      throw ConfigError("env: mass, inertia and damping must be > 0");
    }
    const std::pair<const char*, const Range*> ranges[] = {
        {"env.mass_range", &mass_range},
        {"env.inertia_range", &inertia_range},
        {"env.damping_linear_range", &damping_linear_range},
        {"env.damping_angular_range", &damping_angular_range},
        {"env.odometry_scale_range", &odometry_scale_range}};
    for (const auto& [name, r] : ranges) {
      if (!r->valid() || r->low <= 0.0) {
        throw ConfigError(std::string(name) + ": invalid range (need 0 < low <= high)");
      }
    }
    if (!(force_warmup_end >= 0.0 && force_warmup_end <= 1.0)) throw ConfigError("env.force_warmup_end must be in [0,1]");
    if (force_range < 0.0 || force_range_narrow < 0.0 || torque_range < 0.0) {
      throw ConfigError("env: force and torque ranges must be >= 0");
    }
    if (!(force_resample_period > 0.0)) throw ConfigError("env.force_resample_period must be > 0");
    if (!(action_scale > 0.0 && action_scale_angular > 0.0)) {
      throw ConfigError("env: action scales must be > 0");
    }
    if (history_length == 0) throw ConfigError("env.history_length must be >= 1");
    if (impulse_schedule && (impulse_schedule->magnitude < 0.0 || impulse_schedule->period <= 0.0 ||
                             impulse_schedule->duration < 0.0)) {
      throw ConfigError("env.impulse: invalid schedule");
    }
  }
};

struct StepResult {
  obs::ActorObservation actor_obs;
  obs::PrivilegedObservation privileged_obs;
  RewardVector reward;
  PreferenceVector preference;  // in effect for this step's reward
  bool terminated = false;
  bool truncated = false;
  bool fault = false;
  std::size_t episode_steps = 0;  // length of the finished episode when done
  // Observation of the final state before the automatic reset.
  std::optional<obs::ActorObservation> final_actor_obs;
  std::optional<obs::PrivilegedObservation> final_privileged_obs;
  std::optional<Eigen::VectorXd> final_history;

  bool done() const { return terminated || truncated; }
};

struct ImpulseEvent {
  std::size_t env = 0;
  double time = 0.0;  // episode time
  double fx = 0.0;
  double fy = 0.0;
  double duration = 0.0;
  bool replaced_active = false;
};

// Force-component half-range in effect at a given training phase.
inline double force_range_at(const EnvConfig& c, double phase) {
  return phase < c.narrow_phase ? c.force_range : c.force_range_narrow;
}

// Uniform wrench draw; forces narrow from U(-50,50) to U(-20,20) at the
// configured phase.
inline Wrench resample_wrench(Rng& rng, double phase, const EnvConfig& c) {
  const double f = force_range_at(c, phase);
  Wrench w;
  w.fx = uniform(rng, -f, f);
  w.fy = uniform(rng, -f, f);
  w.tau = uniform(rng, -c.torque_range, c.torque_range);
  return w;
}

// Fraction of the sampled wrench applied during the warm-up.
inline double force_warmup_scale(const EnvConfig& c, double phase) {
  if (c.force_warmup_end <= 0.0) return 1.0;
  return std::clamp(phase / c.force_warmup_end, 0.0, 1.0);
}

inline double perturbation_magnitude(const EnvConfig& c, double phase) {
  if (c.perturbation_ramp_end <= 0.0) return c.perturbation_max;
  return c.perturbation_max * std::clamp(phase / c.perturbation_ramp_end, 0.0, 1.0);
}

// Random planar velocity kick with norm no larger than the ramped maximum.
inline std::array<double, 2> velocity_perturbation(Rng& rng, double max_magnitude) {
  if (max_magnitude <= 0.0) return {0.0, 0.0};
  const double angle = uniform(rng, -std::numbers::pi, std::numbers::pi);
  const double mag = uniform(rng, 0.0, max_magnitude);
  return {mag * std::cos(angle), mag * std::sin(angle)};
}

// Semi-implicit Euler step of the damped planar body. Velocities update
// first, then the pose integrates the new velocity.
inline void integrate(BodyState& s, const Action& accel_cmd, const Wrench& w, double dt,
                      double mass, double inertia, double damping_linear, double damping_angular) {
  const double ax = accel_cmd[0] + (w.fx - damping_linear * s.vx) / mass;
  const double ay = accel_cmd[1] + (w.fy - damping_linear * s.vy) / mass;
  const double aw = accel_cmd[2] + (w.tau - damping_angular * s.omega) / inertia;
  s.vx += dt * ax;
  s.vy += dt * ay;
  s.omega += dt * aw;
  s.ax = ax;
  s.ay = ay;
  const double c = std::cos(s.heading);
  const double sn = std::sin(s.heading);
  s.x += dt * (c * s.vx - sn * s.vy);
  s.y += dt * (sn * s.vx + c * s.vy);
  s.heading = wrap_angle(s.heading + dt * s.omega);
}

// How preferences are chosen at each episode start.
struct PreferenceMode {
  enum class Kind { kSampled, kFixed } kind = Kind::kSampled;
  PreferenceVector fixed{1.0, 1.0, 1.0};

  static PreferenceMode sampled() { return {}; }
  static PreferenceMode constant(PreferenceVector w) { return {Kind::kFixed, w}; }
};

// Vector of independent planar bodies with automatic reset.
class PlanarEnv {
 public:
  PlanarEnv(EnvConfig config, rewards::ComplianceModel model = {},
            rewards::RegularizationCoefs reg = {}, PreferenceMode mode = {})
      : config_(std::move(config)), model_(model), reg_(reg), mode_(mode) {
    config_.validate();
    model_.validate();
  }

  const EnvConfig& config() const { return config_; }
  const rewards::ComplianceModel& compliance_model() const { return model_; }
  std::size_t num_envs() const { return config_.num_envs; }
  std::size_t history_dim() const { return config_.history_length * obs::ActorObservation::dim(); }
  double phase() const { return phase_; }
  void set_phase(double phase) {
    if (!(phase >= 0.0 && phase <= 1.0)) throw ConfigError("phase must be in [0,1]");
    phase_ = phase;
  }

  std::vector<StepResult> reset(std::uint64_t seed) {
    seed_ = seed;
    slots_.assign(config_.num_envs, Slot{});
    impulse_log_.clear();
    std::vector<StepResult> out(config_.num_envs);
    for (std::size_t i = 0; i < config_.num_envs; ++i) {
      auto& s = slots_[i];
      s.physics = make_rng(seed, Stream::kPhysics, i);
      s.pref_rng = make_rng(seed, Stream::kPreference, i);
      s.sensor = make_rng(seed, Stream::kSensor, i);
      s.impulse_rng = make_rng(seed, Stream::kImpulse, i);
      s.history = obs::ObservationHistory(config_.history_length, obs::ActorObservation::dim());
      s.wrench = config_.resample_wrench ? scaled_wrench(s.physics) : Wrench{};
      s.wrench_timer = config_.force_resample_period;
      begin_episode(i);
      if (config_.stagger_episodes) {
        s.step_in_episode = static_cast<std::size_t>(s.physics() % config_.episode_steps());
        // Desynchronize wrench changes across envs as well.
        const auto period = static_cast<std::uint64_t>(std::llround(config_.force_resample_period * config_.control_hz));
        s.wrench_timer = static_cast<double>(1 + s.physics() % std::max<std::uint64_t>(period, 1)) * config_.dt();
      }
      out[i] = observe(i);
    }
    return out;
  }

  // actions: one normalized action per column, entries clamped to [-1, 1].
  std::vector<StepResult> step(const Eigen::MatrixXd& actions) {
    if (slots_.empty()) throw UsageError("PlanarEnv::step before reset");
    if (actions.rows() != static_cast<Eigen::Index>(obs::kActionDim) ||
        actions.cols() != static_cast<Eigen::Index>(config_.num_envs)) {
      throw ConfigError("PlanarEnv::step: actions must be " + std::to_string(obs::kActionDim) + " x " +
                        std::to_string(config_.num_envs));
    }
    std::vector<StepResult> out(config_.num_envs);
    for (std::size_t i = 0; i < config_.num_envs; ++i) out[i] = step_one(i, actions.col(static_cast<Eigen::Index>(i)));
    return out;
  }

  // Overrides the external wrench with magnitude * direction for `duration`
  // seconds; a newer impulse replaces an active one.
  void apply_impulse(std::size_t i, std::array<double, 2> direction, double magnitude, double duration) {
    if (magnitude < 0.0) throw ConfigError("apply_impulse: magnitude must be >= 0");
    auto& s = slot(i);
    const double norm = std::hypot(direction[0], direction[1]);
    if (!(norm > 0.0)) throw ConfigError("apply_impulse: direction must be non-zero");
    ImpulseEvent ev{i, episode_time(i), magnitude * direction[0] / norm,
                    magnitude * direction[1] / norm, duration, s.impulse_remaining > 0.0};
    impulse_log_.push_back(ev);
    if (magnitude == 0.0) return;  // logged, but leaves the scheduled wrench alone
    s.impulse = Wrench{ev.fx, ev.fy, 0.0};
    s.impulse_remaining = duration;
  }

  const std::vector<ImpulseEvent>& impulse_log() const { return impulse_log_; }

  // Scenario controls used by evaluation.
  void set_command(std::size_t i, const VelocityCommand& c) { slot(i).command = c; refresh_observation(i); }
  void set_wrench(std::size_t i, const Wrench& w) {
    if (!w.finite()) throw ConfigError("set_wrench: non-finite wrench");
    slot(i).wrench = w;
  }
  void set_preference(std::size_t i, const PreferenceVector& w) { slot(i).preference = w; refresh_observation(i); }
  void set_body(std::size_t i, const BodyState& b) { slot(i).body = b; }

  const BodyState& body(std::size_t i) const { return slots_.at(i).body; }
  const VelocityCommand& command(std::size_t i) const { return slots_.at(i).command; }
  const PreferenceVector& preference(std::size_t i) const { return slots_.at(i).preference; }
  const Action& last_action(std::size_t i) const { return slots_.at(i).last_action; }
  const obs::ObservationHistory& history(std::size_t i) const { return slots_.at(i).history; }
  double odometry_scale(std::size_t i) const { return slots_.at(i).odometry_scale; }
  std::size_t step_in_episode(std::size_t i) const { return slots_.at(i).step_in_episode; }
  double episode_time(std::size_t i) const {
    return static_cast<double>(slots_.at(i).step_in_episode) * config_.dt();
  }
  // Wrench acting on the body right now (impulse override included).
  Wrench active_wrench(std::size_t i) const {
    const auto& s = slots_.at(i);
    return s.impulse_remaining > 0.0 ? s.impulse : s.wrench;
  }
  Wrench scheduled_wrench(std::size_t i) const { return slots_.at(i).wrench; }

  StepResult observe(std::size_t i) {
    auto& s = slot(i);
    StepResult r;
    r.actor_obs = s.current_obs;
    r.privileged_obs = obs::build_privileged_obs(s.body, active_wrench(i));
    r.preference = s.preference;
    return r;
  }

  // Lossless state snapshot for resuming.
  nlohmann::json export_state() const {
    nlohmann::json j;
    j["seed"] = seed_;
    j["phase"] = phase_;
    nlohmann::json envs = nlohmann::json::array();
    for (const auto& s : slots_) {
      const auto& b = s.body;
      std::vector<double> hist(history_dim());
      s.history.write_flat(hist.data());
      envs.push_back({
          {"body", {b.x, b.y, b.heading, b.vx, b.vy, b.omega, b.mass, b.inertia, b.damping_linear,
                    b.damping_angular, b.ax, b.ay}},
          {"command", {s.command.vx, s.command.vy, s.command.omega}},
          {"wrench", {s.wrench.fx, s.wrench.fy, s.wrench.tau}},
          {"impulse", {s.impulse.fx, s.impulse.fy, s.impulse.tau, s.impulse_remaining}},
          {"preference", {s.preference.w_c, s.preference.w_f, s.preference.w_r}},
          {"last_action", s.last_action},
          {"prev_action", s.prev_action},
          {"timers", {s.wrench_timer, s.perturb_timer}},
          {"odometry_scale", s.odometry_scale},
          {"step_in_episode", s.step_in_episode},
          {"history", hist},
          {"current_obs", vec(s.current_obs.to_vector())},
          {"rng", {rng_state(s.physics), rng_state(s.pref_rng), rng_state(s.sensor),
                   rng_state(s.impulse_rng)}},
      });
    }
    j["envs"] = envs;
    return j;
  }

  void import_state(const nlohmann::json& j) {
    seed_ = j.at("seed").get<std::uint64_t>();
    phase_ = j.at("phase").get<double>();
    const auto& envs = j.at("envs");
    if (envs.size() != config_.num_envs) throw CheckpointError("env state count mismatch");
    slots_.assign(config_.num_envs, Slot{});
    for (std::size_t i = 0; i < config_.num_envs; ++i) {
      const auto& e = envs[i];
      auto& s = slots_[i];
      const auto b = e.at("body").get<std::vector<double>>();
      s.body = {b[0], b[1], b[2], b[3], b[4], b[5], b[6], b[7], b[8], b[9], b[10], b[11]};
      const auto c = e.at("command").get<std::vector<double>>();
      s.command = {c[0], c[1], c[2]};
      const auto w = e.at("wrench").get<std::vector<double>>();
      s.wrench = {w[0], w[1], w[2]};
      const auto im = e.at("impulse").get<std::vector<double>>();
      s.impulse = {im[0], im[1], im[2]};
      s.impulse_remaining = im[3];
      const auto p = e.at("preference").get<std::vector<double>>();
      s.preference = {p[0], p[1], p[2]};
      s.last_action = e.at("last_action").get<Action>();
      s.prev_action = e.at("prev_action").get<Action>();
      const auto t = e.at("timers").get<std::vector<double>>();
      s.wrench_timer = t[0];
      s.perturb_timer = t[1];
      s.odometry_scale = e.at("odometry_scale").get<double>();
      s.step_in_episode = e.at("step_in_episode").get<std::size_t>();
      s.history = obs::ObservationHistory(config_.history_length, obs::ActorObservation::dim());
      const auto hist = e.at("history").get<std::vector<double>>();
      s.history.assign_flat(hist.data());
      const auto co = e.at("current_obs").get<std::vector<double>>();
      s.current_obs = unpack_obs(co);
      const auto& r = e.at("rng");
      restore_rng(s.physics, r[0].get<std::string>());
      restore_rng(s.pref_rng, r[1].get<std::string>());
      restore_rng(s.sensor, r[2].get<std::string>());
      restore_rng(s.impulse_rng, r[3].get<std::string>());
    }
  }

 private:
  struct Slot {
    BodyState body;
    VelocityCommand command;
    Wrench wrench;
    Wrench impulse;
    double impulse_remaining = 0.0;
    PreferenceVector preference;
    Action last_action{};
    Action prev_action{};
    double wrench_timer = 0.0;
    double perturb_timer = 0.0;
    double odometry_scale = 1.0;
    std::size_t step_in_episode = 0;
    obs::ObservationHistory history;
    obs::ActorObservation current_obs;
    Rng physics;
    Rng pref_rng;
    Rng sensor;
    Rng impulse_rng;
  };

  static std::vector<double> vec(const Eigen::VectorXd& v) { return {v.data(), v.data() + v.size()}; }

  static obs::ActorObservation unpack_obs(const std::vector<double>& v) {
    obs::ActorObservation o;
    std::size_t k = 0;
    for (auto& x : o.preference) x = v[k++];
    for (auto& x : o.command) x = v[k++];
    o.omega = v[k++];
    o.heading_sin = v[k++];
    o.heading_cos = v[k++];
    for (auto& x : o.last_action) x = v[k++];
    for (auto& x : o.odometry) x = v[k++];
    for (auto& x : o.accel) x = v[k++];
    return o;
  }

  Slot& slot(std::size_t i) {
    if (i >= slots_.size()) throw ConfigError("env index out of range");
    return slots_[i];
  }

  void begin_episode(std::size_t i) {
    auto& s = slots_[i];
    auto& rng = s.physics;
    BodyState b;
    b.mass = config_.mass;
    b.inertia = config_.inertia;
    b.damping_linear = config_.damping_linear;
    b.damping_angular = config_.damping_angular;
    s.odometry_scale = 1.0;
    if (config_.domain_randomization) {
      b.mass = config_.mass_range.sample(rng);
      b.inertia = config_.inertia_range.sample(rng);
      b.damping_linear = config_.damping_linear_range.sample(rng);
      b.damping_angular = config_.damping_angular_range.sample(rng);
      s.odometry_scale = config_.odometry_scale_range.sample(rng);
      b.heading = uniform(rng, -std::numbers::pi, std::numbers::pi);
    }
    s.body = b;
    s.command.vx = uniform(rng, -config_.command_range_linear, config_.command_range_linear);
    s.command.vy = uniform(rng, -config_.command_range_linear, config_.command_range_linear);
    s.command.omega = uniform(rng, -config_.command_range_angular, config_.command_range_angular);
    s.preference = mode_.kind == PreferenceMode::Kind::kFixed ? mode_.fixed
                                                              : rewards::sample_preference(s.pref_rng);
    s.last_action = {};
    s.prev_action = {};
    s.impulse_remaining = 0.0;
    s.perturb_timer = config_.perturbation_interval;
    s.step_in_episode = 0;
    s.current_obs = obs::build_actor_obs(s.body, s.command, s.preference, s.last_action,
                                         s.odometry_scale, config_.observation_noise, s.sensor);
    s.history.reset(s.current_obs.to_vector());
  }

  // Re-renders the newest observation after a scenario change so the policy
  // sees the new command or preference immediately.
  void refresh_observation(std::size_t i) {
    auto& s = slots_[i];
    s.current_obs.preference = {s.preference.w_c, s.preference.w_f, s.preference.w_r};
    s.current_obs.command = {s.command.vx, s.command.vy, s.command.omega};
    std::vector<double> flat(history_dim());
    s.history.write_flat(flat.data());
    const auto d = obs::ActorObservation::dim();
    const Eigen::VectorXd v = s.current_obs.to_vector();
    std::copy(v.data(), v.data() + d, flat.data() + flat.size() - d);
    s.history.assign_flat(flat.data());
  }

  void maybe_fire_scheduled_impulse(std::size_t i) {
    if (!config_.impulse_schedule) return;
    const auto& sched = *config_.impulse_schedule;
    auto& s = slots_[i];
    const auto period_steps = static_cast<std::size_t>(std::llround(sched.period * config_.control_hz));
    const auto offset_steps = static_cast<std::size_t>(std::llround(sched.offset * config_.control_hz));
    if (period_steps == 0 || s.step_in_episode < offset_steps) return;
    if ((s.step_in_episode - offset_steps) % period_steps != 0) return;
    const double angle = uniform(s.impulse_rng, -std::numbers::pi, std::numbers::pi);
    apply_impulse(i, {std::cos(angle), std::sin(angle)}, sched.magnitude, sched.duration);
  }

  StepResult step_one(std::size_t i, const Eigen::Ref<const Eigen::VectorXd>& raw) {
    auto& s = slots_[i];
    const double dt = config_.dt();
    maybe_fire_scheduled_impulse(i);

    bool fault = false;
    Action a{};
    for (std::size_t k = 0; k < obs::kActionDim; ++k) {
      const double v = raw[static_cast<Eigen::Index>(k)];
      if (!std::isfinite(v)) fault = true;
      a[k] = std::isfinite(v) ? std::clamp(v, -1.0, 1.0) : 0.0;
    }
    const Wrench w = active_wrench(i);
    const PreferenceVector pref = s.preference;

    double mass = s.body.mass;
    double inertia = s.body.inertia;
    double b_lin = s.body.damping_linear;
    double b_ang = s.body.damping_angular;
    if (config_.parameter_noise && phase_ >= config_.parameter_noise_phase) {
      const double p = config_.parameter_noise_scale;
      mass *= 1.0 + uniform(s.physics, -p, p);
      b_lin *= 1.0 + uniform(s.physics, -p, p);
      b_ang *= 1.0 + uniform(s.physics, -p, p);
    }
    const Action accel_cmd{a[0] * config_.action_scale, a[1] * config_.action_scale,
                           a[2] * config_.action_scale_angular};
    if (!fault) integrate(s.body, accel_cmd, w, dt, mass, inertia, b_lin, b_ang);

    StepResult r;
    r.preference = pref;
    const Twist v = s.body.twist();
    r.reward.r_c = rewards::tracking_reward(v, s.command, model_.sigma, model_.angular_scale);
    r.reward.r_f = rewards::compliance_reward(v, w, model_);
    r.reward.r_r = rewards::regularization_reward(a, s.last_action, s.body.omega, reg_);

    s.prev_action = s.last_action;
    s.last_action = a;
    ++s.step_in_episode;

    if (s.impulse_remaining > 0.0) {
      s.impulse_remaining -= dt;
      if (s.impulse_remaining <= 1e-9) s.impulse_remaining = 0.0;
    }
    if (config_.resample_wrench) {
      s.wrench_timer -= dt;
      if (s.wrench_timer <= 1e-9) {
        s.wrench = scaled_wrench(s.physics);
        s.wrench_timer = config_.force_resample_period;
      }
    }
    if (config_.velocity_perturbation) {
      s.perturb_timer -= dt;
      if (s.perturb_timer <= 1e-9) {
        const auto dv = velocity_perturbation(s.physics, perturbation_magnitude(config_, phase_));
        s.body.vx += dv[0];
        s.body.vy += dv[1];
        s.perturb_timer = config_.perturbation_interval;
      }
    }

    const bool unstable = !(s.body.speed() <= config_.max_speed) ||
                          !(std::abs(s.body.omega) <= config_.max_yaw_rate);
    r.fault = fault;
    r.terminated = fault || unstable;
    r.truncated = !r.terminated && s.step_in_episode >= config_.episode_steps();

    s.current_obs = obs::build_actor_obs(s.body, s.command, s.preference, s.last_action,
                                         s.odometry_scale, config_.observation_noise, s.sensor);
    s.history.push(s.current_obs.to_vector());
    r.actor_obs = s.current_obs;
    r.privileged_obs = obs::build_privileged_obs(s.body, active_wrench(i));

    if (r.done()) {
      r.episode_steps = s.step_in_episode;
      r.final_actor_obs = r.actor_obs;
      r.final_privileged_obs = r.privileged_obs;
      r.final_history = s.history.flatten();
      begin_episode(i);
      r.actor_obs = s.current_obs;
      r.privileged_obs = obs::build_privileged_obs(s.body, active_wrench(i));
    }
    return r;
  }

  Wrench scaled_wrench(Rng& rng) const {
    Wrench w = resample_wrench(rng, phase_, config_);
    const double k = force_warmup_scale(config_, phase_);
    w.fx *= k;
    w.fy *= k;
    w.tau *= k;
    return w;
  }

  EnvConfig config_;
  rewards::ComplianceModel model_;
  rewards::RegularizationCoefs reg_;
  PreferenceMode mode_;
  double phase_ = 0.0;
  std::uint64_t seed_ = 0;
  std::vector<Slot> slots_;
  std::vector<ImpulseEvent> impulse_log_;
};

}  // namespace morl::env

#endif  // MORL_ENV_PLANAR_ENV_HPP_
