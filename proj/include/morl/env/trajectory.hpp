#ifndef MORL_ENV_TRAJECTORY_HPP_
#define MORL_ENV_TRAJECTORY_HPP_

#include <cstddef>
#include <cstdio>
#include <ostream>
#include <string>

#include "morl/env/planar_env.hpp"

namespace morl::env {

struct TrajectorySample {
  std::size_t env_id = 0;
  double t = 0.0;
  Twist velocity;
  VelocityCommand command;
  Wrench wrench;
  PreferenceVector preference;
  RewardVector reward;
  Action action{};
  bool terminated = false;
};

// Per-step CSV trajectory log.
class TrajectoryRecorder {
 public:
  explicit TrajectoryRecorder(std::ostream& out) : out_(out) {
    out_ << "env_id,t,vx,vy,omega,v_cx,v_cy,omega_c,Fx,Fy,tau,w_c,w_f,w_r,r_c,r_f,r_r,a_x,a_y,a_yaw,"
            "terminated\n";
  }

  void record(const TrajectorySample& s) {
    char buf[512];
    std::snprintf(buf, sizeof buf,
                  "%zu,%.4f,%.9g,%.9g,%.9g,%.9g,%.9g,%.9g,%.9g,%.9g,%.9g,%.9g,%.9g,%.9g,%.9g,%.9g,%.9g,"
                  "%.9g,%.9g,%.9g,%d\n",
                  s.env_id, s.t, s.velocity.vx, s.velocity.vy, s.velocity.omega, s.command.vx, s.command.vy,
                  s.command.omega, s.wrench.fx, s.wrench.fy, s.wrench.tau, s.preference.w_c,
                  s.preference.w_f, s.preference.w_r, s.reward.r_c, s.reward.r_f, s.reward.r_r, s.action[0],
                  s.action[1], s.action[2], s.terminated ? 1 : 0);
    out_ << buf;
    ++rows_;
  }

  std::size_t rows() const { return rows_; }

 private:
  std::ostream& out_;
  std::size_t rows_ = 0;
};

}  // namespace morl::env

#endif  // MORL_ENV_TRAJECTORY_HPP_
