#pragma once

#include "cdred/envs/env.h"

namespace cdred::envs {

// Torque-limited pendulum, angle measured from upright (theta = 0 is up).
//   omega' = omega + (g/l sin(theta) - damping omega + torque a / (m l^2)) dt
//   theta' = theta + omega' dt
// Observation: (cos theta, sin theta, omega). Starts hanging with a small
// random perturbation.
class Pendulum : public Environment {
 public:
  static constexpr double kGravity = 9.81;
  static constexpr double kLength = 1.0;
  static constexpr double kMass = 1.0;
  static constexpr double kDamping = 0.1;
  static constexpr double kMaxTorque = 5.0;
  static constexpr double kSpawnNoise = 0.2;

  Pendulum();

  const EnvSpec& spec() const override { return spec_; }
  Vector reset(std::uint64_t seed) override;
  StepResult step(const Vector& action) override;
  Vector observation() const override;
  bool success() const override;
  Vector last_action() const override { return last_action_; }
  int steps_taken() const override { return steps_; }

  void set_state(double theta, double omega);
  double theta() const { return theta_; }
  double omega() const { return omega_; }
  static double task_reward(double theta);

 private:
  EnvSpec spec_;
  double theta_ = 0.0;
  double omega_ = 0.0;
  Vector last_action_;
  int steps_ = 0;
};

// Wraps an angle to (-pi, pi].
double wrap_angle(double theta);

}  // namespace cdred::envs
