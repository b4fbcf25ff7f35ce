#pragma once

#include <cstdint>

#include "cdred/nn/param_store.h"

namespace cdred::nn {

struct AdamConfig {
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
};

// First/second moment estimates for one ParamStore.
struct AdamState {
  ParamStore m;
  ParamStore v;
  std::int64_t t = 0;

  static AdamState for_params(const ParamStore& params);
};

// Adaptive-moment update of the trainable groups of `params`. Throws
// NumericalError naming the first group whose gradient is not finite;
// in that case nothing is modified.
void adam_step(ParamStore& params, const ParamStore& grads, AdamState& state,
               double lr, const AdamConfig& config = {});

// base_lr * gamma^floor(step / schedule_step). Throws ConfigError when
// schedule_step <= 0.
double step_lr(std::int64_t global_step, double base_lr,
               std::int64_t schedule_step, double gamma);

// target <- (1 - tau) * target + tau * online, for every group.
// Throws ConfigError when tau is outside [0, 1].
void soft_update(const ParamStore& online, ParamStore& target, double tau);

// Rescales a set of gradient stores so their joint L2 norm is at most
// max_norm. Returns the norm before clipping. max_norm <= 0 disables.
double clip_grad_norm(std::initializer_list<ParamStore*> grads, double max_norm);

}  // namespace cdred::nn
