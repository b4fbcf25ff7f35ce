#include "cdred/envs/env.h"

#include "cdred/common/error.h"
#include "cdred/envs/pendulum.h"
#include "cdred/envs/point_mass.h"

namespace cdred::envs {

Vector clip_action(const Vector& action, const EnvSpec& spec) {
  if (action.size() != spec.action_dim) {
    throw DimensionError(spec.name + ": action width " + std::to_string(action.size()) +
                         ", expected " + std::to_string(spec.action_dim));
  }
  Vector out = action.cwiseMax(spec.action_low).cwiseMin(spec.action_high);
  for (Eigen::Index i = 0; i < out.size(); ++i) {
    if (std::isnan(out[i])) out[i] = 0.0;
  }
  return out;
}

std::unique_ptr<Environment> make_env(const std::string& name) {
  if (name == "point-mass-2d") return std::make_unique<PointMass2D>();
  if (name == "pendulum-swingup") return std::make_unique<Pendulum>();
  throw ConfigError("unknown environment '" + name + "'");
}

std::vector<std::string> registered_envs() { return {"point-mass-2d", "pendulum-swingup"}; }

EnvSpec env_spec(const std::string& name) { return make_env(name)->spec(); }

}  // namespace cdred::envs
