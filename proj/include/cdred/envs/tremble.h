#pragma once

#include <memory>

#include "cdred/envs/env.h"

namespace cdred::envs {

// With probability p per step, replaces the supplied action with one drawn
// uniformly from the action box. The randomness is seeded from reset().
class TrembleEnv : public Environment {
 public:
  // Throws ConfigError when p is outside [0, 1].
  TrembleEnv(std::unique_ptr<Environment> inner, double p_tremble);

  const EnvSpec& spec() const override { return inner_->spec(); }
  Vector reset(std::uint64_t seed) override;
  StepResult step(const Vector& action) override;
  Vector observation() const override { return inner_->observation(); }
  bool success() const override { return inner_->success(); }
  Vector last_action() const override { return inner_->last_action(); }
  int steps_taken() const override { return inner_->steps_taken(); }

  bool last_trembled() const { return last_trembled_; }
  double p_tremble() const { return p_; }
  Environment& inner() { return *inner_; }

 private:
  std::unique_ptr<Environment> inner_;
  double p_;
  Rng rng_;
  bool last_trembled_ = false;
};

}  // namespace cdred::envs
