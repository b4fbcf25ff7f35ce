#include "cdred/envs/pendulum.h"

#include <cmath>
#include <numbers>

namespace cdred::envs {

double wrap_angle(double theta) {
  double t = std::fmod(theta + std::numbers::pi, 2.0 * std::numbers::pi);
  if (t <= 0.0) t += 2.0 * std::numbers::pi;
  return t - std::numbers::pi;
}

Pendulum::Pendulum() {
  spec_.name = "pendulum-swingup";
  spec_.obs_dim = 3;
  spec_.action_dim = 1;
  last_action_ = Vector::Zero(1);
}

Vector Pendulum::reset(std::uint64_t seed) {
  Rng rng(mix_seed(seed, 13));
  std::uniform_real_distribution<double> u(-kSpawnNoise, kSpawnNoise);
  theta_ = wrap_angle(std::numbers::pi + u(rng));
  omega_ = u(rng);
  last_action_ = Vector::Zero(1);
  steps_ = 0;
  return observation();
}

void Pendulum::set_state(double theta, double omega) {
  theta_ = wrap_angle(theta);
  omega_ = omega;
}

Vector Pendulum::observation() const {
  Vector o(3);
  o << std::cos(theta_), std::sin(theta_), omega_;
  return o;
}

double Pendulum::task_reward(double theta) {
  const double up = 0.5 * (1.0 + std::cos(theta));
  return up * up * up * up;
}

StepResult Pendulum::step(const Vector& action) {
  const Vector a = clip_action(action, spec_);
  const double dt = spec_.dt;
  const double accel = kGravity / kLength * std::sin(theta_) - kDamping * omega_ +
                       kMaxTorque * a[0] / (kMass * kLength * kLength);
  omega_ += accel * dt;
  theta_ = wrap_angle(theta_ + omega_ * dt);
  last_action_ = a;
  ++steps_;
  StepResult r;
  r.obs = observation();
  r.reward = task_reward(theta_);
  r.truncated = steps_ >= spec_.episode_length;
  return r;
}

bool Pendulum::success() const { return std::cos(theta_) > std::cos(0.25); }

}  // namespace cdred::envs
