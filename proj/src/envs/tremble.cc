#include "cdred/envs/tremble.h"

#include "cdred/common/error.h"

namespace cdred::envs {

TrembleEnv::TrembleEnv(std::unique_ptr<Environment> inner, double p_tremble)
    : inner_(std::move(inner)), p_(p_tremble) {
  if (!(p_ >= 0.0 && p_ <= 1.0)) throw ConfigError("tremble: p must lie in [0, 1]");
}

Vector TrembleEnv::reset(std::uint64_t seed) {
  rng_.seed(mix_seed(seed, 17));
  last_trembled_ = false;
  return inner_->reset(seed);
}

StepResult TrembleEnv::step(const Vector& action) {
  const EnvSpec& s = inner_->spec();
  std::bernoulli_distribution coin(p_);
  last_trembled_ = coin(rng_);
  if (!last_trembled_) return inner_->step(action);
  std::uniform_real_distribution<double> u(s.action_low, s.action_high);
  Vector random(s.action_dim);
  for (Eigen::Index i = 0; i < random.size(); ++i) random[i] = u(rng_);
  return inner_->step(random);
}

}  // namespace cdred::envs
