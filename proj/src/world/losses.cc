#include "cdred/world/losses.h"

#include <cmath>

#include "cdred/common/error.h"

namespace cdred::world {
namespace {

double masked_mean(const Vector& v, int begin, int end) {
  if (end <= begin) return std::numeric_limits<double>::quiet_NaN();
  return v.segment(begin, end - begin).mean();
}

}  // namespace

WorldGradients WorldGradients::zeros_for(const WorldModel& model,
                                         const reward::CdredModel& cdred) {
  WorldGradients g;
  g.encoder = model.encoder().params().zeros_like();
  g.dynamics = model.dynamics().params().zeros_like();
  g.policy = model.policy().params().zeros_like();
  for (int i = 0; i < model.config().num_q; ++i) g.q.push_back(model.q(i).params().zeros_like());
  g.cdred_expert = cdred.expert().params().zeros_like();
  g.cdred_behavioral = cdred.behavioral().params().zeros_like();
  return g;
}

std::vector<nn::ParamStore*> WorldGradients::stores() {
  std::vector<nn::ParamStore*> out{&encoder, &dynamics, &policy};
  for (auto& s : q) out.push_back(&s);
  out.push_back(&cdred_expert);
  out.push_back(&cdred_behavioral);
  return out;
}

void WorldGradients::set_zero() {
  for (auto* s : stores()) s->set_zero();
}

void WorldGradients::scale(double factor) {
  for (auto* s : stores()) s->scale(factor);
}

double WorldGradients::norm() const {
  double sq = encoder.squared_norm() + dynamics.squared_norm() + policy.squared_norm() +
              cdred_expert.squared_norm() + cdred_behavioral.squared_norm();
  for (const auto& s : q) sq += s.squared_norm();
  return std::sqrt(sq);
}

Vector td_target(const Vector& reward, const Vector& bootstrap, const Vector& terminal,
                 double gamma) {
  if (reward.size() != bootstrap.size() || reward.size() != terminal.size()) {
    throw DimensionError("td_target: size mismatch");
  }
  return reward.array() + gamma * (1.0 - terminal.array()) * bootstrap.array();
}

UpdateContext prepare_update(const WorldModel& model, const reward::CdredModel& cdred,
                             const buffers::SegmentBatch& batch, const LossConfig& config,
                             Rng& rng) {
  const int steps = batch.steps();
  const int n = batch.batch_size();
  const int ne = batch.expert_count;
  const int ad = model.config().action_dim;
  if (static_cast<int>(batch.obs.size()) != steps) throw BatchError("prepare_update: ragged batch");

  UpdateContext ctx;
  Matrix z = model.encode(batch.obs[0]);
  for (int t = 0; t < steps; ++t) {
    const Matrix& a = batch.actions[static_cast<std::size_t>(t)];
    ctx.rollout_latents.push_back(z);
    ctx.next_latents.push_back(model.encode(batch.next_obs[static_cast<std::size_t>(t)]));
    ctx.rewards.push_back(cdred.evaluate(z, a));
    z = model.latent_step(z, a);
  }
  for (int t = 0; t < steps; ++t) {
    const Matrix& zn = ctx.next_latents[static_cast<std::size_t>(t)];
    const PolicyOutput next = model.policy_sample(zn, PolicyMode::kStochastic, rng);
    const Vector boot = model.bootstrap_value(zn, next.action);
    ctx.td_targets.push_back(td_target(ctx.rewards[static_cast<std::size_t>(t)], boot,
                                       batch.terminal[static_cast<std::size_t>(t)],
                                       config.gamma));
    ctx.policy_noise.push_back(standard_normal(ad, n, rng));
  }
  for (int t = 0; t < steps; ++t) {
    const Matrix enc = model.encode(batch.obs[static_cast<std::size_t>(t)]);
    const Matrix za = vstack(enc, batch.actions[static_cast<std::size_t>(t)]);
    ctx.cdred.expert.push_back(za.leftCols(ne));
    ctx.cdred.behavioral.push_back(za.rightCols(n - ne));
  }
  std::uniform_int_distribution<int> pick(0, cdred.config().ensemble - 1);
  ctx.target_index = pick(rng);
  return ctx;
}

LossBreakdown model_loss(const WorldModel& model, const reward::CdredModel& cdred,
                         const buffers::SegmentBatch& batch, const UpdateContext& ctx,
                         const LossConfig& config, WorldGradients* grads, nn::Mode q_mode,
                         Rng* rng) {
  const int steps = batch.steps();
  const int n = batch.batch_size();
  const int latent = model.config().latent_dim;
  const int num_q = model.config().num_q;
  const double inv_n = 1.0 / static_cast<double>(n);
  const BinGrid grid = model.grid();
  LossBreakdown out;

  // Consistency: live unroll from h(s_0).
  nn::MlpCache enc_cache;
  std::vector<nn::MlpCache> dyn_cache(static_cast<std::size_t>(steps));
  std::vector<Matrix> residual(static_cast<std::size_t>(steps));
  Matrix z = model.encoder().forward(batch.obs[0], nn::Mode::kEval, nullptr,
                                     grads != nullptr ? &enc_cache : nullptr);
  double w = 1.0;
  for (int t = 0; t < steps; ++t) {
    const auto ts = static_cast<std::size_t>(t);
    const Matrix pred = model.dynamics().forward(vstack(z, batch.actions[ts]), nn::Mode::kEval,
                                                 nullptr, grads != nullptr ? &dyn_cache[ts] : nullptr);
    residual[ts] = pred - ctx.next_latents[ts];
    out.consistency += w * residual[ts].squaredNorm() * inv_n;
    residual[ts] *= 2.0 * w * inv_n;
    z = pred;
    w *= config.lambda;
  }
  if (grads != nullptr) {
    Matrix carry = Matrix::Zero(latent, n);
    for (int t = steps - 1; t >= 0; --t) {
      const auto ts = static_cast<std::size_t>(t);
      const Matrix dza = model.dynamics().backward(dyn_cache[ts], residual[ts] + carry,
                                                   &grads->dynamics);
      carry = dza.topRows(latent);
    }
    model.encoder().backward(enc_cache, carry, &grads->encoder);
  }

  // TD: cross-entropy of every online head against two-hot targets.
  w = 1.0;
  for (int t = 0; t < steps; ++t) {
    const auto ts = static_cast<std::size_t>(t);
    const Matrix za = vstack(ctx.rollout_latents[ts], batch.actions[ts]);
    const Matrix target = two_hot_encode(ctx.td_targets[ts], grid);
    for (int i = 0; i < num_q; ++i) {
      nn::MlpCache cache;
      const Matrix logits = model.q(i).forward(za, q_mode, rng,
                                               grads != nullptr ? &cache : nullptr);
      const Matrix logp = log_softmax(logits);
      out.td += -w * target.cwiseProduct(logp).sum() * inv_n / num_q;
      if (grads != nullptr) {
        const Matrix dlogits = (w * inv_n / num_q) * (softmax(logits) - target);
        model.q(i).backward(cache, dlogits, &grads->q[static_cast<std::size_t>(i)]);
      }
    }
    w *= config.lambda;
  }

  const reward::CdredLoss cl =
      cdred.cdred_loss(ctx.cdred, config.lambda, ctx.target_index,
                       grads != nullptr ? &grads->cdred_expert : nullptr,
                       grads != nullptr ? &grads->cdred_behavioral : nullptr);
  out.cdred = cl.total;
  out.model = out.consistency + out.td + out.cdred;
  out.reward_expert_mean = masked_mean(ctx.rewards[0], 0, batch.expert_count);
  out.reward_behavioral_mean = masked_mean(ctx.rewards[0], batch.expert_count, n);
  return out;
}

double policy_loss(const WorldModel& model, const UpdateContext& ctx, const LossConfig& config,
                   WorldGradients* grads) {
  const WorldModelConfig& wc = model.config();
  const int ad = wc.action_dim;
  const BinGrid grid = model.grid();
  double loss = 0.0;
  double w = 1.0;
  for (std::size_t t = 0; t < ctx.rollout_latents.size(); ++t) {
    const Matrix& z = ctx.rollout_latents[t];
    const auto n = z.cols();
    const double inv_n = 1.0 / static_cast<double>(n);
    nn::MlpCache pcache;
    const Matrix head = model.policy().forward(z, nn::Mode::kEval, nullptr,
                                               grads != nullptr ? &pcache : nullptr);
    const Matrix raw = head.bottomRows(ad);
    const Matrix log_std = squash_log_std(raw, wc.log_std_min, wc.log_std_max);
    const PolicyOutput pi = tanh_gaussian(head.topRows(ad), log_std, ctx.policy_noise[t]);

    const Matrix za = vstack(z, pi.action);
    Vector q = Vector::Zero(n);
    Matrix dq_da = Matrix::Zero(ad, n);
    for (int i = 0; i < wc.num_q; ++i) {
      nn::MlpCache qcache;
      const Matrix logits = model.q(i).forward(za, nn::Mode::kEval, nullptr,
                                               grads != nullptr ? &qcache : nullptr);
      q += decode_logits(logits, grid) / wc.num_q;
      if (grads != nullptr) {
        const Matrix dlogits = decode_logits_gradient(logits, grid) / wc.num_q;
        dq_da += model.q(i).backward(qcache, dlogits, nullptr).bottomRows(ad);
      }
    }
    loss += w * (-q.array() + config.beta * pi.log_prob.array()).mean();

    if (grads != nullptr) {
      const Eigen::ArrayXXd a = pi.action.array();
      const Eigen::ArrayXXd std = log_std.array().exp();
      const Eigen::ArrayXXd eps = pi.noise.array();
      const Eigen::ArrayXXd dl_du = (-w * inv_n) * dq_da.array() * (1.0 - a.square());
      const double bw = config.beta * w * inv_n;
      const Eigen::ArrayXXd dmean = dl_du + bw * 2.0 * a;
      const Eigen::ArrayXXd dlog_std = dl_du * std * eps + bw * (-1.0 + 2.0 * a * std * eps);
      const Eigen::ArrayXXd draw = dlog_std * 0.5 * (wc.log_std_max - wc.log_std_min) *
                                   (1.0 - raw.array().tanh().square());
      Matrix dhead(2 * ad, n);
      dhead.topRows(ad) = dmean.matrix();
      dhead.bottomRows(ad) = draw.matrix();
      model.policy().backward(pcache, dhead, &grads->policy);
    }
    w *= config.lambda;
  }
  return loss;
}

}  // namespace cdred::world
