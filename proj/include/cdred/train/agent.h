#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "cdred/buffers/replay_buffer.h"
#include "cdred/nn/optim.h"
#include "cdred/planner/mppi.h"
#include "cdred/reward/cdred_model.h"
#include "cdred/train/config.h"
#include "cdred/world/losses.h"
#include "cdred/world/world_model.h"

namespace cdred::train {

struct UpdateStats {
  world::LossBreakdown loss;
  double grad_norm = 0.0;  // after the 1/H scaling, before clipping
  double lr = 0.0;
};

// World model + reward model + optimizer state, exposed to the planner.
class Agent : public planner::LatentModel {
 public:
  Agent(const TrainConfig& config, int obs_dim, int action_dim);

  int action_dim() const override { return world_.config().action_dim; }
  Matrix encode(const Matrix& obs) const override { return world_.encode(obs); }
  Matrix next(const Matrix& z, const Matrix& a) const override { return world_.latent_step(z, a); }
  Vector reward(const Matrix& z, const Matrix& a) const override { return cdred_.evaluate(z, a); }
  Vector value(const Matrix& z, const Matrix& a) const override;
  Matrix policy_action(const Matrix& z, Rng& rng) const override;

  // Deterministic policy head action for one observation.
  Vector policy_act(const Vector& obs) const;

  // One joint step on the model and policy losses. Throws NumericalError
  // (before any parameter changes) when a loss or gradient is not finite.
  UpdateStats update(const buffers::SegmentBatch& batch, Rng& rng);

  double learning_rate() const;
  std::int64_t updates() const { return updates_; }
  const TrainConfig& config() const { return config_; }
  world::WorldModel& world() { return world_; }
  const world::WorldModel& world() const { return world_; }
  reward::CdredModel& cdred() { return cdred_; }
  const reward::CdredModel& cdred() const { return cdred_; }

  void save(const std::string& path, std::int64_t env_step) const;
  // Returns the environment step recorded in the checkpoint.
  std::int64_t load(const std::string& path);

 private:
  std::vector<nn::ParamStore*> param_stores();

  TrainConfig config_;
  world::WorldModel world_;
  reward::CdredModel cdred_;
  world::LossConfig loss_;
  world::WorldGradients grads_;
  std::vector<nn::AdamState> adam_;
  std::int64_t updates_ = 0;
};

}  // namespace cdred::train
