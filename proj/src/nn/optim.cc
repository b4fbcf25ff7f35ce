#include "cdred/nn/optim.h"

#include <cmath>

#include "cdred/common/error.h"

namespace cdred::nn {

AdamState AdamState::for_params(const ParamStore& params) {
  return AdamState{params.zeros_like(), params.zeros_like(), 0};
}

void adam_step(ParamStore& params, const ParamStore& grads, AdamState& state,
               double lr, const AdamConfig& config) {
  params.check_same_layout(grads);
  params.check_same_layout(state.m);
  for (const auto& g : grads.groups()) {
    for (const auto& a : g.arrays) {
      if (!a.value.allFinite()) {
        throw NumericalError("non-finite gradient in parameter group '" +
                             g.name + "' (array " + a.name + ")");
      }
    }
  }

  state.t += 1;
  const double bc1 = 1.0 - std::pow(config.beta1, static_cast<double>(state.t));
  const double bc2 = 1.0 - std::pow(config.beta2, static_cast<double>(state.t));
  const double step = lr / bc1;
  const double sqrt_bc2 = std::sqrt(bc2);

  auto& pg = params.groups();
  for (std::size_t i = 0; i < pg.size(); ++i) {
    if (!pg[i].trainable) continue;
    for (std::size_t j = 0; j < pg[i].arrays.size(); ++j) {
      const auto& gv = grads.group(i).arrays[j].value.array();
      auto m = state.m.group(i).arrays[j].value.array();
      auto v = state.v.group(i).arrays[j].value.array();
      m = config.beta1 * m + (1.0 - config.beta1) * gv;
      v = config.beta2 * v + (1.0 - config.beta2) * gv.square();
      pg[i].arrays[j].value.array() -=
          step * m / (v.sqrt() / sqrt_bc2 + config.eps);
    }
  }
  params.touch();
}

double step_lr(std::int64_t global_step, double base_lr,
               std::int64_t schedule_step, double gamma) {
  if (schedule_step <= 0) throw ConfigError("step_lr: schedule_step must be > 0");
  const auto k = global_step / schedule_step;
  return base_lr * std::pow(gamma, static_cast<double>(k));
}

void soft_update(const ParamStore& online, ParamStore& target, double tau) {
  if (!(tau >= 0.0 && tau <= 1.0)) {
    throw ConfigError("soft_update: tau must lie in [0, 1]");
  }
  target.check_same_layout(online);
  for (std::size_t i = 0; i < target.groups().size(); ++i) {
    auto& tg = target.group(i);
    for (std::size_t j = 0; j < tg.arrays.size(); ++j) {
      auto& t = tg.arrays[j].value;
      const auto& o = online.group(i).arrays[j].value;
      if (tau == 1.0) {
        t = o;
      } else if (tau > 0.0) {
        t = (1.0 - tau) * t + tau * o;
      }
    }
  }
  target.touch();
}

double clip_grad_norm(std::initializer_list<ParamStore*> grads, double max_norm) {
  double sq = 0.0;
  for (const auto* g : grads) sq += g->squared_norm();
  const double norm = std::sqrt(sq);
  if (max_norm > 0.0 && std::isfinite(norm) && norm > max_norm) {
    const double s = max_norm / (norm + 1e-6);
    for (auto* g : grads) g->scale(s);
  }
  return norm;
}

}  // namespace cdred::nn
