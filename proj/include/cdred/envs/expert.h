#pragma once

#include <string>

#include "cdred/common/types.h"

namespace cdred::envs {

// Scripted demonstrators.
//   point-mass-2d: saturated PD toward the origin.
//   pendulum-swingup: energy pumping far from upright, PD near it.
Vector expert_action(const std::string& env_name, const Vector& obs);

}  // namespace cdred::envs
