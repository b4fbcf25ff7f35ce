#include "cdred/envs/expert.h"

#include <algorithm>
#include <cmath>

#include "cdred/common/error.h"
#include "cdred/envs/pendulum.h"

namespace cdred::envs {
namespace {

constexpr double kPointMassKp = 5.0;
constexpr double kPointMassKd = 2.9;

constexpr double kPendulumPumpGain = 1.0;
constexpr double kPendulumCatchAngle = 0.5;
constexpr double kPendulumKp = 4.0;
constexpr double kPendulumKd = 1.0;

Vector point_mass_expert(const Vector& obs) {
  if (obs.size() != 4) throw DimensionError("point-mass expert: observation width 4");
  Vector a = -kPointMassKp * obs.head<2>() - kPointMassKd * obs.tail<2>();
  return a.cwiseMax(-1.0).cwiseMin(1.0);
}

Vector pendulum_expert(const Vector& obs) {
  if (obs.size() != 3) throw DimensionError("pendulum expert: observation width 3");
  const double theta = std::atan2(obs[1], obs[0]);
  const double omega = obs[2];
  double u;
  if (std::abs(theta) < kPendulumCatchAngle) {
    u = -kPendulumKp * theta - kPendulumKd * omega;
  } else {
    // Energy relative to upright rest; pump along omega while below it.
    const double g = Pendulum::kGravity / Pendulum::kLength;
    const double energy = 0.5 * omega * omega + g * (std::cos(theta) - 1.0);
    const double dir = omega == 0.0 ? 1.0 : (omega > 0.0 ? 1.0 : -1.0);
    u = kPendulumPumpGain * (-energy) * dir;
  }
  Vector a(1);
  a[0] = std::clamp(u, -1.0, 1.0);
  return a;
}

}  // namespace

Vector expert_action(const std::string& env_name, const Vector& obs) {
  if (env_name == "point-mass-2d") return point_mass_expert(obs);
  if (env_name == "pendulum-swingup") return pendulum_expert(obs);
  throw ConfigError("no scripted expert for environment '" + env_name + "'");
}

}  // namespace cdred::envs
