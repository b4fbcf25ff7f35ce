#pragma once

#include <limits>
#include <vector>

#include "cdred/buffers/replay_buffer.h"
#include "cdred/nn/param_store.h"
#include "cdred/reward/cdred_model.h"
#include "cdred/world/world_model.h"

namespace cdred::world {

struct LossConfig {
  double lambda = 0.5;  // horizon discount
  double gamma = 0.99;  // environment discount
  double beta = 1e-4;   // entropy coefficient
};

// Every stop-gradient quantity of one update, computed once from the
// current parameters and then held constant by the loss functions.
struct UpdateContext {
  std::vector<Matrix> next_latents;     // sg(h(s'_t))
  std::vector<Matrix> rollout_latents;  // sg(z_t) from the dynamics unroll
  std::vector<Vector> rewards;          // R(z_t, a_t)
  std::vector<Vector> td_targets;       // q_t
  std::vector<Matrix> policy_noise;     // reparameterization draws
  reward::CdredBatch cdred;             // sg(h(s_t)) with actions, split by source
  int target_index = 0;                 // k ~ U[0, K)
};

// Gradient stores mirroring every trainable network.
struct WorldGradients {
  nn::ParamStore encoder;
  nn::ParamStore dynamics;
  nn::ParamStore policy;
  std::vector<nn::ParamStore> q;
  nn::ParamStore cdred_expert;
  nn::ParamStore cdred_behavioral;

  static WorldGradients zeros_for(const WorldModel& model, const reward::CdredModel& cdred);
  std::vector<nn::ParamStore*> stores();
  void set_zero();
  void scale(double factor);
  double norm() const;
};

struct LossBreakdown {
  double consistency = 0.0;
  double td = 0.0;
  double cdred = 0.0;
  double model = 0.0;   // consistency + td + cdred
  double policy = 0.0;
  double reward_expert_mean = std::numeric_limits<double>::quiet_NaN();
  double reward_behavioral_mean = std::numeric_limits<double>::quiet_NaN();
};

// q_t = r + gamma * (1 - terminal) * bootstrap.
Vector td_target(const Vector& reward, const Vector& bootstrap, const Vector& terminal,
                 double gamma);

UpdateContext prepare_update(const WorldModel& model, const reward::CdredModel& cdred,
                             const buffers::SegmentBatch& batch, const LossConfig& config,
                             Rng& rng);

// sum_t lambda^t (||d(z_t, a_t) - sg(h(s'_t))||^2 + CE(Q(sg(z_t), a_t), two_hot(q_t)))
// plus the coupled distillation loss. Consistency gradients reach the
// dynamics and encoder, TD gradients only the Q heads, distillation
// gradients only the predictors. `q_mode` selects dropout in the Q heads.
LossBreakdown model_loss(const WorldModel& model, const reward::CdredModel& cdred,
                         const buffers::SegmentBatch& batch, const UpdateContext& ctx,
                         const LossConfig& config, WorldGradients* grads,
                         nn::Mode q_mode = nn::Mode::kEval, Rng* rng = nullptr);

// sum_t lambda^t mean(-Q(z_t, pi(z_t)) + beta log pi(.|z_t)) on sg(z_t).
// Q heads are constants; gradients reach only the policy.
double policy_loss(const WorldModel& model, const UpdateContext& ctx,
                   const LossConfig& config, WorldGradients* grads);

}  // namespace cdred::world
