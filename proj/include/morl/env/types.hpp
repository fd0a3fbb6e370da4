#ifndef MORL_ENV_TYPES_HPP_
#define MORL_ENV_TYPES_HPP_

#include <cmath>
#include <numbers>

namespace morl::env {

// Planar velocity (vx, vy) m/s in the body frame plus yaw rate rad/s.
struct Twist {
  double vx = 0.0;
  double vy = 0.0;
  double omega = 0.0;

  bool operator==(const Twist&) const = default;
};

// External force (body frame) and yaw torque.
struct Wrench {
  double fx = 0.0;
  double fy = 0.0;
  double tau = 0.0;

  bool finite() const { return std::isfinite(fx) && std::isfinite(fy) && std::isfinite(tau); }
  bool operator==(const Wrench&) const = default;
};

struct VelocityCommand {
  double vx = 0.0;
  double vy = 0.0;
  double omega = 0.0;

  Twist as_twist() const { return {vx, vy, omega}; }
  bool operator==(const VelocityCommand&) const = default;
};

// Full physical state of the planar body. Velocities are body-frame.
struct BodyState {
  double x = 0.0;
  double y = 0.0;
  double heading = 0.0;  // wrapped to (-pi, pi]
  double vx = 0.0;
  double vy = 0.0;
  double omega = 0.0;
  double mass = 30.0;
  double inertia = 2.0;
  double damping_linear = 25.0;
  double damping_angular = 5.0;
  // Body-frame linear acceleration over the last integration step; what an
  // IMU accelerometer would report.
  double ax = 0.0;
  double ay = 0.0;

  Twist twist() const { return {vx, vy, omega}; }
  double speed() const { return std::hypot(vx, vy); }
  double kinetic_energy() const {
    return 0.5 * mass * (vx * vx + vy * vy) + 0.5 * inertia * omega * omega;
  }
  bool operator==(const BodyState&) const = default;
};

inline double wrap_angle(double a) {
  constexpr double kPi = std::numbers::pi;
  a = std::fmod(a + kPi, 2.0 * kPi);
  if (a <= 0.0) a += 2.0 * kPi;
  return a - kPi;
}

}  // namespace morl::env

#endif  // MORL_ENV_TYPES_HPP_
