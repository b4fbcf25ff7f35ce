#pragma once

#include "cdred/envs/env.h"

namespace cdred::envs {

// Damped planar double integrator with the goal at the origin.
//   x' = x + v dt
//   v' = v + (gain a - damping v) dt
// Observation: (px, py, vx, vy). Spawn uniform over the box [-1, 1]^2 at rest.
class PointMass2D : public Environment {
 public:
  static constexpr double kGain = 2.0;
  static constexpr double kDamping = 0.5;
  static constexpr double kSpawnHalfWidth = 1.0;
  static constexpr double kGoalRadius = 0.05;
  static constexpr double kRewardScale = 0.1;
  static constexpr double kSuccessRadius = 0.1;

  PointMass2D();

  const EnvSpec& spec() const override { return spec_; }
  Vector reset(std::uint64_t seed) override;
  StepResult step(const Vector& action) override;
  Vector observation() const override { return state_; }
  bool success() const override;
  Vector last_action() const override { return last_action_; }
  int steps_taken() const override { return steps_; }

  void set_state(const Vector& state);
  static double task_reward(const Vector& obs);

 private:
  EnvSpec spec_;
  Vector state_;
  Vector last_action_;
  int steps_ = 0;
};

}  // namespace cdred::envs
