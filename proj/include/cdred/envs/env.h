#pragma once

#include <cstdint>
#include <memory>
#include <string>
#include <vector>

#include "cdred/common/types.h"

namespace cdred::envs {

struct EnvSpec {
  std::string name;
  int obs_dim = 0;
  int action_dim = 0;
  double action_low = -1.0;
  double action_high = 1.0;
  int episode_length = 200;
  double dt = 0.05;
};

struct StepResult {
  Vector obs;
  double reward = 0.0;
  bool terminal = false;   // failure terminal (absorbing); toy tasks never set it
  bool truncated = false;  // time limit reached
};

class Environment {
 public:
  virtual ~Environment() = default;

  virtual const EnvSpec& spec() const = 0;
  // Deterministic given seed.
  virtual Vector reset(std::uint64_t seed) = 0;
  // Actions outside the box are clipped.
  virtual StepResult step(const Vector& action) = 0;
  virtual Vector observation() const = 0;
  // Task-specific success at the current state.
  virtual bool success() const { return false; }
  // Action actually applied by the last step (differs under wrappers).
  virtual Vector last_action() const = 0;
  virtual int steps_taken() const = 0;
};

Vector clip_action(const Vector& action, const EnvSpec& spec);

// Registry keyed by name: "point-mass-2d", "pendulum-swingup".
std::unique_ptr<Environment> make_env(const std::string& name);
std::vector<std::string> registered_envs();
EnvSpec env_spec(const std::string& name);

}  // namespace cdred::envs
