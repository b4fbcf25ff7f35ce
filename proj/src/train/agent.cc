#include "cdred/train/agent.h"

#include <cmath>
#include <sstream>

#include "cdred/common/error.h"
#include "cdred/nn/checkpoint.h"

namespace cdred::train {

Agent::Agent(const TrainConfig& config, int obs_dim, int action_dim)
    : config_(config),
      world_(config.world_config(obs_dim, action_dim)),
      cdred_(config.cdred_config(action_dim)),
      loss_(config.loss_config()) {
  grads_ = world::WorldGradients::zeros_for(world_, cdred_);
  for (nn::ParamStore* p : param_stores()) adam_.push_back(nn::AdamState::for_params(*p));
}

std::vector<nn::ParamStore*> Agent::param_stores() {
  std::vector<nn::ParamStore*> out{&world_.encoder().params(), &world_.dynamics().params(),
                                   &world_.policy().params()};
  for (int i = 0; i < world_.config().num_q; ++i) out.push_back(&world_.q(i).params());
  out.push_back(&cdred_.expert().params());
  out.push_back(&cdred_.behavioral().params());
  return out;
}

Vector Agent::value(const Matrix& z, const Matrix& a) const {
  return world_.q_value(z, a, world::HeadSet::kOnline).value;
}

Matrix Agent::policy_action(const Matrix& z, Rng& rng) const {
  return world_.policy_sample(z, world::PolicyMode::kStochastic, rng).action;
}

Vector Agent::policy_act(const Vector& obs) const {
  Rng unused(0);
  const Matrix z = world_.encode(obs);
  return world_.policy_sample(z, world::PolicyMode::kDeterministic, unused).action.col(0);
}

double Agent::learning_rate() const {
  return nn::step_lr(updates_, config_.lr, config_.scheduler_step, config_.lr_gamma);
}

UpdateStats Agent::update(const buffers::SegmentBatch& batch, Rng& rng) {
  UpdateStats stats;
  const world::UpdateContext ctx = world::prepare_update(world_, cdred_, batch, loss_, rng);
  grads_.set_zero();
  stats.loss = world::model_loss(world_, cdred_, batch, ctx, loss_, &grads_, nn::Mode::kTrain, &rng);
  stats.loss.policy = world::policy_loss(world_, ctx, loss_, &grads_);
  if (!std::isfinite(stats.loss.model) || !std::isfinite(stats.loss.policy)) {
    std::ostringstream msg;
    msg << "non-finite loss at update " << updates_ << ": consistency=" << stats.loss.consistency
        << " td=" << stats.loss.td << " cdred=" << stats.loss.cdred
        << " policy=" << stats.loss.policy;
    throw NumericalError(msg.str());
  }
  grads_.scale(1.0 / config_.horizon);
  stats.grad_norm = grads_.norm();
  if (!std::isfinite(stats.grad_norm)) {
    throw NumericalError("non-finite gradient norm at update " + std::to_string(updates_));
  }
  if (config_.grad_clip > 0.0 && stats.grad_norm > config_.grad_clip) {
    grads_.scale(config_.grad_clip / stats.grad_norm);
  }
  stats.lr = learning_rate();
  const std::vector<nn::ParamStore*> params = param_stores();
  const std::vector<nn::ParamStore*> grads = grads_.stores();
  for (std::size_t i = 0; i < params.size(); ++i) {
    nn::adam_step(*params[i], *grads[i], adam_[i], stats.lr);
  }
  world_.soft_update_targets(config_.tau);
  ++updates_;
  return stats;
}

void Agent::save(const std::string& path, std::int64_t env_step) const {
  nn::Checkpoint ck;
  world_.save(ck, "world");
  cdred_.save(ck, "cdred");
  for (std::size_t i = 0; i < adam_.size(); ++i) {
    const std::string p = "adam/" + std::to_string(i);
    ck.add_store(p + "/m", adam_[i].m);
    ck.add_store(p + "/v", adam_[i].v);
    ck.set_integer(p + "/t", static_cast<std::uint64_t>(adam_[i].t));
  }
  ck.set_integer("updates", static_cast<std::uint64_t>(updates_));
  ck.set_integer("env_step", static_cast<std::uint64_t>(env_step));
  ck.save(path);
}

std::int64_t Agent::load(const std::string& path) {
  const nn::Checkpoint ck = nn::Checkpoint::load(path);
  world_.load(ck, "world");
  cdred_.load(ck, "cdred");
  for (std::size_t i = 0; i < adam_.size(); ++i) {
    const std::string p = "adam/" + std::to_string(i);
    ck.load_store(p + "/m", adam_[i].m);
    ck.load_store(p + "/v", adam_[i].v);
    adam_[i].t = static_cast<std::int64_t>(ck.integer(p + "/t"));
  }
  updates_ = static_cast<std::int64_t>(ck.integer("updates"));
  return static_cast<std::int64_t>(ck.integer("env_step"));
}

}  // namespace cdred::train
