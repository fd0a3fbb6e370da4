#ifndef MORL_OBSERVATIONS_OBSERVATIONS_HPP_
#define MORL_OBSERVATIONS_OBSERVATIONS_HPP_

#include <Eigen/Dense>

#include <array>
#include <cmath>
#include <cstddef>
#include <string>
#include <utility>
#include <vector>

#include "json.hpp"
#include "morl/common/error.hpp"
#include "morl/common/rng.hpp"
#include "morl/env/types.hpp"
#include "morl/rewards/rewards.hpp"

namespace morl::obs {

using Vector = Eigen::VectorXd;
using env::BodyState;
using env::VelocityCommand;
using env::Wrench;
using rewards::PreferenceVector;

inline constexpr std::size_t kActionDim = 3;

// Named channel with its width; the ordered list is the vector layout.
struct Channel {
  std::string name;
  std::size_t dim;

  bool operator==(const Channel&) const = default;
};
using Layout = std::vector<Channel>;

inline std::size_t layout_dim(const Layout& layout) {
  std::size_t n = 0;
  for (const auto& c : layout) n += c.dim;
  return n;
}

inline nlohmann::json layout_to_json(const Layout& layout) {
  nlohmann::json j = nlohmann::json::array();
  for (const auto& c : layout) j.push_back({{"name", c.name}, {"dim", c.dim}});
  return j;
}

inline Layout layout_from_json(const nlohmann::json& j) {
  Layout layout;
  for (const auto& c : j) layout.push_back({c.at("name").get<std::string>(), c.at("dim").get<std::size_t>()});
  return layout;
}

// Additive uniform noise half-widths for the actor channels.
struct ObservationNoise {
  double omega = 0.05;
  double heading = 0.02;
  double odometry = 0.05;
  double accel = 0.1;
};

// Deployable signals. Contains neither the external wrench nor the true
// linear velocity; the only velocity-like channel is leg odometry, which
// carries a per-episode scale miscalibration plus noise.
struct ActorObservation {
  std::array<double, 3> preference{};
  std::array<double, 3> command{};
  double omega = 0.0;
  double heading_sin = 0.0;
  double heading_cos = 1.0;
  std::array<double, kActionDim> last_action{};
  std::array<double, 2> odometry{};
  std::array<double, 2> accel{};

  static const Layout& layout() {
    static const Layout kLayout = {
        {"preference", 3}, {"command", 3},     {"angular_velocity", 1}, {"heading_trig", 2},
        {"last_action", kActionDim}, {"odometry_velocity", 2}, {"imu_acceleration", 2},
    };
    return kLayout;
  }
  static std::size_t dim() { return layout_dim(layout()); }

  Vector to_vector() const {
    Vector v(static_cast<Eigen::Index>(dim()));
    Eigen::Index k = 0;
    for (double x : preference) v[k++] = x;
    for (double x : command) v[k++] = x;
    v[k++] = omega;
    v[k++] = heading_sin;
    v[k++] = heading_cos;
    for (double x : last_action) v[k++] = x;
    for (double x : odometry) v[k++] = x;
    for (double x : accel) v[k++] = x;
    return v;
  }

  bool finite() const { return to_vector().allFinite(); }
};

// Fixed normalization of privileged quantities before they enter a network.
struct PrivilegedScaling {
  double velocity = 2.0;
  double force = 50.0;
  double torque = 10.0;
  double mass_nominal = 30.0;
  double damping_linear_nominal = 25.0;
  double damping_angular_nominal = 5.0;
  double relative_span = 0.1;  // +-10% maps to +-1
};

// Simulator ground truth; never noised.
struct PrivilegedObservation {
  std::array<double, 2> linear_velocity{};
  std::array<double, 3> wrench{};  // fx, fy, tau
  double mass = 0.0;
  std::array<double, 2> damping{};  // linear, angular

  static const Layout& layout() {
    static const Layout kLayout = {
        {"linear_velocity", 2}, {"wrench", 3}, {"mass", 1}, {"damping", 2}};
    return kLayout;
  }
  static std::size_t dim() { return layout_dim(layout()); }
  static constexpr Eigen::Index kForceOffset = 2;  // fx, fy in the feature vector

  Vector features(const PrivilegedScaling& s) const {
    Vector v(static_cast<Eigen::Index>(dim()));
    v << linear_velocity[0] / s.velocity, linear_velocity[1] / s.velocity, wrench[0] / s.force,
        wrench[1] / s.force, wrench[2] / s.torque,
        (mass / s.mass_nominal - 1.0) / s.relative_span,
        (damping[0] / s.damping_linear_nominal - 1.0) / s.relative_span,
        (damping[1] / s.damping_angular_nominal - 1.0) / s.relative_span;
    return v;
  }

  static PrivilegedObservation from_features(const Eigen::Ref<const Vector>& f,
                                             const PrivilegedScaling& s) {
    PrivilegedObservation p;
    p.linear_velocity = {f[0] * s.velocity, f[1] * s.velocity};
    p.wrench = {f[2] * s.force, f[3] * s.force, f[4] * s.torque};
    p.mass = (1.0 + f[5] * s.relative_span) * s.mass_nominal;
    p.damping = {(1.0 + f[6] * s.relative_span) * s.damping_linear_nominal,
                 (1.0 + f[7] * s.relative_span) * s.damping_angular_nominal};
    return p;
  }
};

inline double noise(Rng& rng, double scale) {
  return scale > 0.0 ? uniform(rng, -scale, scale) : 0.0;
}

template <typename Action>
ActorObservation build_actor_obs(const BodyState& state, const VelocityCommand& command,
                                 const PreferenceVector& preference, const Action& last_action,
                                 double odometry_scale, const ObservationNoise& n, Rng& rng) {
  ActorObservation o;
  o.preference = {preference.w_c, preference.w_f, preference.w_r};
  o.command = {command.vx, command.vy, command.omega};
  o.omega = state.omega + noise(rng, n.omega);
  o.heading_sin = std::sin(state.heading) + noise(rng, n.heading);
  o.heading_cos = std::cos(state.heading) + noise(rng, n.heading);
  for (std::size_t i = 0; i < kActionDim; ++i) o.last_action[i] = last_action[i];
  o.odometry = {odometry_scale * state.vx + noise(rng, n.odometry),
                odometry_scale * state.vy + noise(rng, n.odometry)};
  o.accel = {state.ax + noise(rng, n.accel), state.ay + noise(rng, n.accel)};
  return o;
}

inline PrivilegedObservation build_privileged_obs(const BodyState& state, const Wrench& wrench) {
  PrivilegedObservation p;
  p.linear_velocity = {state.vx, state.vy};
  p.wrench = {wrench.fx, wrench.fy, wrench.tau};
  p.mass = state.mass;
  p.damping = {state.damping_linear, state.damping_angular};
  return p;
}

// Fixed-length FIFO of actor observation vectors, zero padded after reset.
class ObservationHistory {
 public:
  ObservationHistory() = default;
  ObservationHistory(std::size_t length, std::size_t obs_dim)
      : length_(length), obs_dim_(obs_dim), slots_(length, Vector::Zero(static_cast<Eigen::Index>(obs_dim))) {
    if (length == 0 || obs_dim == 0) throw ConfigError("ObservationHistory: length and dim must be >= 1");
  }

  std::size_t length() const { return length_; }
  std::size_t obs_dim() const { return obs_dim_; }

  // Clears to zeros and places `newest` in the final slot.
  void reset(const Vector& newest) {
    for (auto& s : slots_) s.setZero();
    head_ = 0;
    push(newest);
  }

  void push(const Vector& obs) {
    if (obs.size() != static_cast<Eigen::Index>(obs_dim_)) {
      throw ConfigError("ObservationHistory: observation dim mismatch");
    }
    slots_[head_] = obs;
    head_ = (head_ + 1) % length_;
  }

  // Oldest first.
  Vector flatten() const {
    Vector out(static_cast<Eigen::Index>(length_ * obs_dim_));
    write_flat(out.data());
    return out;
  }

  void write_flat(double* dst) const {
    for (std::size_t k = 0; k < length_; ++k) {
      const auto& s = slots_[(head_ + k) % length_];
      std::copy(s.data(), s.data() + obs_dim_, dst + k * obs_dim_);
    }
  }

  // Replaces contents from an oldest-first flat vector (checkpoint restore).
  void assign_flat(const double* src) {
    for (std::size_t k = 0; k < length_; ++k) {
      slots_[k] = Eigen::Map<const Vector>(src + k * obs_dim_, static_cast<Eigen::Index>(obs_dim_));
    }
    head_ = 0;
  }

 private:
  std::size_t length_ = 0;
  std::size_t obs_dim_ = 0;
  std::vector<Vector> slots_;
  std::size_t head_ = 0;  // index of the oldest slot
};

}  // namespace morl::obs

#endif  // MORL_OBSERVATIONS_OBSERVATIONS_HPP_
