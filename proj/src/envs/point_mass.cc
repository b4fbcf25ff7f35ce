#include "cdred/envs/point_mass.h"

#include <cmath>

#include "cdred/common/error.h"

namespace cdred::envs {

PointMass2D::PointMass2D() {
  spec_.name = "point-mass-2d";
  spec_.obs_dim = 4;
  spec_.action_dim = 2;
  state_ = Vector::Zero(4);
  last_action_ = Vector::Zero(2);
}

Vector PointMass2D::reset(std::uint64_t seed) {
  Rng rng(mix_seed(seed, 11));
  std::uniform_real_distribution<double> u(-kSpawnHalfWidth, kSpawnHalfWidth);
  state_ = Vector::Zero(4);
  state_[0] = u(rng);
  state_[1] = u(rng);
  last_action_ = Vector::Zero(2);
  steps_ = 0;
  return state_;
}

void PointMass2D::set_state(const Vector& state) {
  if (state.size() != 4) throw DimensionError("point-mass-2d: state width must be 4");
  state_ = state;
}

double PointMass2D::task_reward(const Vector& obs) {
  const double d = obs.head<2>().norm();
  const double excess = std::max(0.0, d - kGoalRadius);
  return std::exp(-0.5 * excess * excess / (kRewardScale * kRewardScale));
}

StepResult PointMass2D::step(const Vector& action) {
  const Vector a = clip_action(action, spec_);
  const double dt = spec_.dt;
  Vector next = state_;
  next.head<2>() = state_.head<2>() + dt * state_.tail<2>();
  next.tail<2>() = state_.tail<2>() + dt * (kGain * a - kDamping * state_.tail<2>());
  state_ = next;
  last_action_ = a;
  ++steps_;
  StepResult r;
  r.obs = state_;
  r.reward = task_reward(state_);
  r.truncated = steps_ >= spec_.episode_length;
  return r;
}

bool PointMass2D::success() const { return state_.head<2>().norm() < kSuccessRadius; }

}  // namespace cdred::envs
