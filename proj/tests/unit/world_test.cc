#include <doctest.h>

#include <cmath>
#include <numbers>

#include "cdred/common/error.h"
#include "cdred/nn/checkpoint.h"
#include "cdred/nn/optim.h"
#include "cdred/world/losses.h"
#include "cdred/world/policy.h"
#include "cdred/world/two_hot.h"
#include "cdred/world/world_model.h"
#include "oracles.h"

using namespace cdred;
using namespace cdred::world;

namespace {

WorldModelConfig small_world() {
  WorldModelConfig c;
  c.obs_dim = 3;
  c.action_dim = 2;
  c.latent_dim = 16;
  c.enc_dim = 12;
  c.mlp_dim = 12;
  c.num_q = 3;
  c.num_bins = 21;
  c.simnorm_group = 4;
  c.seed = 5;
  return c;
}

reward::CdredModel small_cdred() {
  reward::CdredConfig c;
  c.latent_dim = 16;
  c.action_dim = 2;
  c.hidden_dim = 10;
  c.embed_dim = 4;
  c.ensemble = 3;
  c.seed = 8;
  return reward::CdredModel(c);
}

buffers::SegmentBatch random_batch(int horizon, int n, int expert, Rng& rng) {
  buffers::SegmentBatch b;
  b.horizon = horizon;
  b.expert_count = expert;
  std::bernoulli_distribution term(0.2);
  for (int t = 0; t <= horizon; ++t) {
    b.obs.push_back(testing::random_matrix(3, n, rng));
    b.actions.push_back(testing::random_matrix(2, n, rng, 0.9));
    b.next_obs.push_back(testing::random_matrix(3, n, rng));
    b.rewards.push_back(Vector::Zero(n));
    Vector tm(n);
    for (int i = 0; i < n; ++i) tm[i] = term(rng) ? 1.0 : 0.0;
    b.terminal.push_back(tm);
  }
  for (int i = 0; i < n; ++i) {
    b.source.push_back(i < expert ? buffers::Source::kExpert : buffers::Source::kBehavioral);
    b.origin.emplace_back(0, 0);
  }
  return b;
}

// Independent log density of a = tanh(u), u ~ N(m, s^2), written from the
// change-of-variables formula.
double oracle_log_density(double m, double log_s, double a) {
  const double s = std::exp(log_s);
  const double u = 0.5 * std::log((1.0 + a) / (1.0 - a));
  const double gauss = std::exp(-0.5 * (u - m) * (u - m) / (s * s)) / (s * std::sqrt(2.0 * std::numbers::pi));
  return std::log(gauss / (1.0 - a * a));
}

}  // namespace

TEST_CASE("symlog and symexp are inverse and odd") {
  for (double x : {-1e4, -3.0, -0.5, 0.0, 1e-9, 0.7, 20.0, 1e5}) {
    CHECK(symexp(symlog(x)) == doctest::Approx(x).epsilon(1e-12));
    CHECK(symlog(-x) == -symlog(x));
  }
  CHECK(symlog(std::exp(1.0) - 1.0) == doctest::Approx(1.0));
}

TEST_CASE("two-hot round trip within the representable range") {
  const BinGrid grid{101, -10.0, 10.0};
  Rng rng(3);
  std::uniform_real_distribution<double> u(-9.99, 9.99);
  for (int i = 0; i < 500; ++i) {
    const double v = symexp(u(rng));
    const Vector p = two_hot_encode(v, grid);
    CHECK(p.sum() == doctest::Approx(1.0));
    CHECK((p.array() >= 0.0).all());
    CHECK((p.array() > 0.0).count() <= 2);
    CHECK(std::abs(two_hot_decode(p, grid) - v) <= 1e-6 * std::max(1.0, std::abs(v)));
  }
  // Out of range clips to the end bins.
  CHECK(two_hot_encode(1e9, grid)(100) == 1.0);
  CHECK(two_hot_decode(two_hot_encode(-1e9, grid), grid) == doctest::Approx(-symexp(10.0)));
  CHECK(std::abs(two_hot_decode(two_hot_encode(0.0, grid), grid)) < 1e-12);
}

TEST_CASE("decoded logits and their gradient") {
  const BinGrid grid{11, -3.0, 3.0};
  Rng rng(2);
  Matrix logits = testing::random_matrix(11, 3, rng, 2.0);
  const Vector d = decode_logits(logits, grid);
  for (int c = 0; c < 3; ++c) {
    CHECK(d(c) == doctest::Approx(two_hot_decode(softmax(logits.col(c)), grid)));
  }
  const Matrix g = decode_logits_gradient(logits, grid);
  for (int c = 0; c < 3; ++c) {
    Matrix col = logits.col(c);
    const Matrix fd = testing::fd_gradient(col, [&] { return decode_logits(col, grid)(0); });
    CHECK(testing::max_relative_error(Matrix(g.col(c)), fd) < 1e-5);
  }
  CHECK(testing::max_relative_error(log_softmax(logits),
                                    Matrix(softmax(logits).array().log().matrix())) < 1e-12);
}

TEST_CASE("tanh gaussian log-probability matches the density oracle") {
  Rng rng(11);
  for (int trial = 0; trial < 50; ++trial) {
    const Matrix mean = testing::random_matrix(3, 4, rng);
    const Matrix log_std = testing::random_matrix(3, 4, rng, 0.5);
    const PolicyOutput out = tanh_gaussian(mean, log_std, standard_normal(3, 4, rng));
    for (int c = 0; c < 4; ++c) {
      double lp = 0.0;
      for (int i = 0; i < 3; ++i) lp += oracle_log_density(mean(i, c), log_std(i, c), out.action(i, c));
      CHECK(out.log_prob(c) == doctest::Approx(lp).epsilon(1e-9));
    }
    CHECK(testing::max_relative_error(Matrix(out.log_prob),
                                      Matrix(tanh_gaussian_log_prob(mean, log_std, out.action))) < 1e-8);
  }
}

TEST_CASE("one-dimensional squashed density integrates to one") {
  const double m = 0.3, ls = -0.4;
  const int n = 200000;
  double sum = 0.0;
  for (int i = 1; i < n; ++i) {
    const double a = -1.0 + 2.0 * i / n;
    sum += std::exp(tanh_gaussian_log_prob(Matrix::Constant(1, 1, m), Matrix::Constant(1, 1, ls),
                                           Matrix::Constant(1, 1, a))(0));
  }
  CHECK(sum * 2.0 / n == doctest::Approx(1.0).epsilon(1e-4));
}

TEST_CASE("log1m_tanh_sq is stable") {
  for (double u : {-50.0, -3.0, 0.0, 0.4, 7.0, 400.0}) {
    const double t = std::tanh(u);
    if (std::abs(u) < 10.0) CHECK(log1m_tanh_sq(u) == doctest::Approx(std::log(1.0 - t * t)));
    CHECK(std::isfinite(log1m_tanh_sq(u)));
  }
  CHECK(log1m_tanh_sq(400.0) == doctest::Approx(2.0 * std::log(2.0) - 800.0));
}

TEST_CASE("squashed log-std stays within bounds") {
  Rng rng(1);
  const Matrix raw = testing::random_matrix(4, 50, rng, 100.0);
  const Matrix s = squash_log_std(raw, -10.0, 2.0);
  CHECK((s.array() >= -10.0).all());
  CHECK((s.array() <= 2.0).all());
}

TEST_CASE("encoder and dynamics outputs lie on simplices") {
  WorldModel model(small_world());
  Rng rng(4);
  const Matrix z = model.encode(testing::random_matrix(3, 7, rng, 3.0));
  const Matrix zn = model.latent_step(z, testing::random_matrix(2, 7, rng));
  for (const Matrix* m : {&z, &zn}) {
    CHECK(m->rows() == 16);
    CHECK((m->array() >= 0.0).all());
    for (int g = 0; g < 4; ++g) {
      for (int c = 0; c < 7; ++c) CHECK(m->block(4 * g, c, 4, 1).sum() == doctest::Approx(1.0));
    }
  }
  CHECK_THROWS_AS(model.encode(Matrix::Zero(4, 2)), DimensionError);
}

TEST_CASE("deterministic policy and bounded actions") {
  WorldModel model(small_world());
  Rng rng(9);
  const Matrix z = model.encode(testing::random_matrix(3, 20, rng));
  Rng r1(1), r2(2);
  const PolicyOutput d1 = model.policy_sample(z, PolicyMode::kDeterministic, r1);
  const PolicyOutput d2 = model.policy_sample(z, PolicyMode::kDeterministic, r2);
  CHECK(d1.action == d2.action);
  Matrix mean, log_std;
  model.policy_distribution(z, &mean, &log_std);
  CHECK(testing::max_relative_error(d1.action, Matrix(mean.array().tanh().matrix())) < 1e-14);
  const PolicyOutput s = model.policy_sample(z, PolicyMode::kStochastic, r1);
  CHECK((s.action.array().abs() < 1.0).all());
  CHECK((log_std.array() >= -10.0).all());
  CHECK((log_std.array() <= 2.0).all());
}

TEST_CASE("bootstrap value averages the two lowest target heads") {
  WorldModel model(small_world());
  Rng rng(12);
  const Matrix z = model.encode(testing::random_matrix(3, 9, rng));
  const Matrix a = testing::random_matrix(2, 9, rng, 0.5);
  const QEstimate q = model.q_value(z, a, HeadSet::kTarget);
  const Vector boot = model.bootstrap_value(z, a);
  for (int c = 0; c < 9; ++c) {
    std::vector<double> h(q.head_values.col(c).data(), q.head_values.col(c).data() + 3);
    std::sort(h.begin(), h.end());
    CHECK(boot(c) == doctest::Approx(0.5 * (h[0] + h[1])));
    CHECK(q.head_values(0, c) == doctest::Approx(decode_logits(q.logits[0].col(c), model.grid())(0)));
  }
  CHECK(testing::max_relative_error(Matrix(q.value),
                                    Matrix(q.head_values.colwise().mean().transpose())) < 1e-14);
}

TEST_CASE("td target masks terminal rows") {
  Vector r(3), b(3), t(3);
  r << 1.0, 2.0, 3.0;
  b << 10.0, 10.0, 10.0;
  t << 0.0, 1.0, 0.0;
  const Vector q = td_target(r, b, t, 0.9);
  CHECK(q(0) == doctest::Approx(10.0));
  CHECK(q(1) == 2.0);
  CHECK(q(2) == doctest::Approx(12.0));
  CHECK_THROWS_AS(td_target(r, Vector::Zero(2), t, 0.9), DimensionError);
}

TEST_CASE("target heads move only through soft updates") {
  WorldModel model(small_world());
  const nn::ParamStore before = model.q_target(0).params();
  model.q(0).params().group(0).arrays[0].value.array() += 1.0;
  model.q(0).params().touch();
  CHECK(model.q_target(0).params().same_values(before));
  model.soft_update_targets(0.25);
  const Matrix& tv = model.q_target(0).params().group(0).arrays[0].value;
  const Matrix expected = before.group(0).arrays[0].value.array() + 0.25;
  CHECK(testing::max_relative_error(tv, expected) < 1e-12);
  CHECK(!model.q_target(0).params().any_trainable());
}

TEST_CASE("model loss gradients match finite differences under a fixed context") {
  WorldModel model(small_world());
  reward::CdredModel cdred = small_cdred();
  Rng rng(31);
  const buffers::SegmentBatch batch = random_batch(2, 6, 3, rng);
  const LossConfig cfg;
  const UpdateContext ctx = prepare_update(model, cdred, batch, cfg, rng);
  WorldGradients grads = WorldGradients::zeros_for(model, cdred);
  const LossBreakdown lb = model_loss(model, cdred, batch, ctx, cfg, &grads);
  CHECK(lb.model == doctest::Approx(lb.consistency + lb.td + lb.cdred));
  CHECK(lb.consistency > 0.0);
  CHECK(lb.td > 0.0);
  auto loss = [&] { return model_loss(model, cdred, batch, ctx, cfg, nullptr).model; };
  CHECK(testing::max_relative_error(grads.encoder, testing::fd_gradient(model.encoder().params(), loss)) < 1e-4);
  CHECK(testing::max_relative_error(grads.dynamics, testing::fd_gradient(model.dynamics().params(), loss)) < 1e-4);
  for (int i = 0; i < 3; ++i) {
    CHECK(testing::max_relative_error(grads.q[static_cast<std::size_t>(i)],
                                      testing::fd_gradient(model.q(i).params(), loss)) < 1e-4);
  }
  CHECK(testing::max_relative_error(grads.cdred_expert, testing::fd_gradient(cdred.expert().params(), loss)) < 1e-4);
  CHECK(testing::max_relative_error(grads.cdred_behavioral, testing::fd_gradient(cdred.behavioral().params(), loss)) < 1e-4);
  CHECK(grads.policy.squared_norm() == 0.0);
}

TEST_CASE("model loss with dropout is reproducible and differentiable") {
  WorldModelConfig wc = small_world();
  wc.q_dropout = 0.2;
  WorldModel model(wc);
  reward::CdredModel cdred = small_cdred();
  Rng rng(32);
  const buffers::SegmentBatch batch = random_batch(1, 5, 2, rng);
  const LossConfig cfg;
  const UpdateContext ctx = prepare_update(model, cdred, batch, cfg, rng);
  WorldGradients grads = WorldGradients::zeros_for(model, cdred);
  Rng d0(7);
  model_loss(model, cdred, batch, ctx, cfg, &grads, nn::Mode::kTrain, &d0);
  auto loss = [&] {
    Rng d(7);
    return model_loss(model, cdred, batch, ctx, cfg, nullptr, nn::Mode::kTrain, &d).model;
  };
  CHECK(testing::max_relative_error(grads.q[1], testing::fd_gradient(model.q(1).params(), loss)) < 1e-4);
}

TEST_CASE("policy loss gradients match finite differences") {
  WorldModel model(small_world());
  reward::CdredModel cdred = small_cdred();
  Rng rng(33);
  const buffers::SegmentBatch batch = random_batch(2, 5, 2, rng);
  LossConfig cfg;
  cfg.beta = 0.3;
  const UpdateContext ctx = prepare_update(model, cdred, batch, cfg, rng);
  WorldGradients grads = WorldGradients::zeros_for(model, cdred);
  policy_loss(model, ctx, cfg, &grads);
  auto loss = [&] { return policy_loss(model, ctx, cfg, nullptr); };
  CHECK(testing::max_relative_error(grads.policy, testing::fd_gradient(model.policy().params(), loss)) < 1e-3);
  CHECK(grads.encoder.squared_norm() == 0.0);
  CHECK(grads.q[0].squared_norm() == 0.0);
}

TEST_CASE("gradient steps on the Q heads lower the cross-entropy") {
  WorldModel model(small_world());
  reward::CdredModel cdred = small_cdred();
  Rng rng(34);
  const buffers::SegmentBatch batch = random_batch(1, 16, 8, rng);
  const LossConfig cfg;
  const UpdateContext ctx = prepare_update(model, cdred, batch, cfg, rng);
  std::vector<nn::AdamState> states;
  for (int i = 0; i < 3; ++i) states.push_back(nn::AdamState::for_params(model.q(i).params()));
  const double first = model_loss(model, cdred, batch, ctx, cfg, nullptr).td;
  for (int step = 0; step < 50; ++step) {
    WorldGradients g = WorldGradients::zeros_for(model, cdred);
    model_loss(model, cdred, batch, ctx, cfg, &g);
    for (int i = 0; i < 3; ++i) nn::adam_step(model.q(i).params(), g.q[static_cast<std::size_t>(i)], states[static_cast<std::size_t>(i)], 1e-2);
  }
  CHECK(model_loss(model, cdred, batch, ctx, cfg, nullptr).td < 0.5 * first);
}

TEST_CASE("prepare_update is deterministic and splits by source") {
  WorldModel model(small_world());
  reward::CdredModel cdred = small_cdred();
  Rng rng(35);
  const buffers::SegmentBatch batch = random_batch(3, 7, 4, rng);
  Rng a(1), b(1);
  const UpdateContext ca = prepare_update(model, cdred, batch, LossConfig{}, a);
  const UpdateContext cb = prepare_update(model, cdred, batch, LossConfig{}, b);
  CHECK(ca.td_targets.size() == 4);
  for (std::size_t t = 0; t < 4; ++t) {
    CHECK(ca.td_targets[t] == cb.td_targets[t]);
    CHECK(ca.cdred.expert[t].cols() == 4);
    CHECK(ca.cdred.behavioral[t].cols() == 3);
  }
  CHECK(ca.target_index == cb.target_index);
  CHECK(testing::max_relative_error(ca.rollout_latents[0], model.encode(batch.obs[0])) < 1e-14);
}

TEST_CASE("world model checkpoint round trip") {
  WorldModel a(small_world());
  a.soft_update_targets(0.5);
  a.policy().params().group(0).arrays[0].value(0, 0) = 3.0;
  a.policy().params().touch();
  nn::Checkpoint ck;
  a.save(ck, "w");
  WorldModelConfig other = small_world();
  other.seed = 77;
  WorldModel b(other);
  b.load(ck, "w");
  CHECK(b.policy().params().same_values(a.policy().params()));
  CHECK(b.q_target(2).params().same_values(a.q_target(2).params()));
  WorldModelConfig wide = small_world();
  wide.latent_dim = 20;
  WorldModel c(wide);
  CHECK_THROWS(c.load(ck, "w"));
}

namespace {

void flatten_q_heads(WorldModel& model) {
  for (int i = 0; i < model.config().num_q; ++i) {
    for (nn::Mlp* m : {&model.q(i), &model.q_target(i)}) {
      for (auto& arr : m->params().groups().back().arrays) arr.value.setZero();
      m->params().touch();
    }
  }
}

UpdateContext first_step(const UpdateContext& ctx) {
  UpdateContext c;
  c.next_latents = {ctx.next_latents[0]};
  c.rollout_latents = {ctx.rollout_latents[0]};
  c.rewards = {ctx.rewards[0]};
  c.td_targets = {ctx.td_targets[0]};
  c.policy_noise = {ctx.policy_noise[0]};
  c.cdred.expert = {ctx.cdred.expert[0]};
  c.cdred.behavioral = {ctx.cdred.behavioral[0]};
  c.target_index = ctx.target_index;
  return c;
}

buffers::SegmentBatch first_step(const buffers::SegmentBatch& b) {
  buffers::SegmentBatch out = b;
  out.horizon = 0;
  out.obs.resize(1);
  out.actions.resize(1);
  out.next_obs.resize(1);
  out.rewards.resize(1);
  out.terminal.resize(1);
  return out;
}

}  // namespace

TEST_CASE("decoding degenerate and uniform logits") {
  const BinGrid grid{101, -10.0, 10.0};
  CHECK(std::abs(decode_logits(Matrix::Zero(101, 1), grid)(0)) < 1e-12);
  for (int c : {0, 17, 50, 100}) {
    Matrix logits = Matrix::Constant(101, 1, -1e4);
    logits(c, 0) = 0.0;
    CHECK(symlog(decode_logits(logits, grid)(0)) == doctest::Approx(grid.center(c)).epsilon(1e-12));
  }
  Vector mid = two_hot_encode(symexp(0.5 * (grid.center(40) + grid.center(41))), grid);
  CHECK(mid(40) == doctest::Approx(0.5));
  CHECK(mid(41) == doctest::Approx(0.5));
  Vector exact = two_hot_encode(symexp(grid.center(70)), grid);
  CHECK(exact(70) == doctest::Approx(1.0));
}

TEST_CASE("identical heads give the single-head value") {
  WorldModel model(small_world());
  for (int i = 1; i < 3; ++i) {
    model.q(i).params() = model.q(0).params();
    model.q(i).set_trainable(true);
  }
  Rng rng(3);
  const Matrix z = model.encode(testing::random_matrix(3, 5, rng));
  const Matrix a = testing::random_matrix(2, 5, rng, 0.5);
  const QEstimate q = model.q_value(z, a, HeadSet::kOnline);
  for (int c = 0; c < 5; ++c) CHECK(q.value(c) == doctest::Approx(q.head_values(0, c)).epsilon(1e-14));
}

TEST_CASE("td target examples") {
  const Vector r = Vector::Constant(1, 1.0), q = Vector::Constant(1, 10.0), live = Vector::Zero(1);
  CHECK(td_target(r, q, live, 0.99)(0) == doctest::Approx(10.9));
  CHECK(td_target(r, q, live, 0.0)(0) == 1.0);
  CHECK(td_target(r, q, Vector::Ones(1), 0.99)(0) == 1.0);
}

TEST_CASE("encoder separates observations and unrolls move") {
  WorldModel model(small_world());
  Rng rng(6);
  const Matrix obs = testing::random_matrix(3, 2, rng);
  const Matrix z = model.encode(obs);
  CHECK(z.col(0) != z.col(1));
  CHECK(model.encode(obs) == z);
  Matrix zt = z.col(0);
  std::vector<Matrix> seen{zt};
  for (int t = 0; t < 3; ++t) {
    zt = model.latent_step(zt, testing::random_matrix(2, 1, rng));
    for (const auto& s : seen) CHECK(s != zt);
    seen.push_back(zt);
  }
}

TEST_CASE("floored log-std samples sit on the deterministic action") {
  Rng rng(8);
  const Matrix mean = testing::random_matrix(2, 50, rng);
  const PolicyOutput out = tanh_gaussian(mean, Matrix::Constant(2, 50, -10.0), standard_normal(2, 50, rng));
  CHECK((out.action - Matrix(mean.array().tanh().matrix())).cwiseAbs().maxCoeff() < 1e-3);
}

TEST_CASE("reported log-probability matches a sample histogram") {
  const double m = 0.4, ls = -0.7;
  const int n = 100000;
  Rng rng(12);
  const PolicyOutput out = tanh_gaussian(Matrix::Constant(1, n, m), Matrix::Constant(1, n, ls),
                                         standard_normal(1, n, rng));
  const double ref = std::tanh(m), half = 0.02;
  int inside = 0;
  for (int i = 0; i < n; ++i) inside += std::abs(out.action(0, i) - ref) < half ? 1 : 0;
  const double empirical = inside / (2.0 * half * n);
  const double reported = std::exp(tanh_gaussian_log_prob(Matrix::Constant(1, 1, m), Matrix::Constant(1, 1, ls),
                                                          Matrix::Constant(1, 1, ref))(0));
  CHECK(std::abs(empirical / reported - 1.0) < 0.05);
}

TEST_CASE("zero lambda keeps only the first step") {
  WorldModel model(small_world());
  reward::CdredModel cdred = small_cdred();
  Rng rng(40);
  const buffers::SegmentBatch batch = random_batch(3, 5, 2, rng);
  LossConfig cfg;
  const UpdateContext ctx = prepare_update(model, cdred, batch, cfg, rng);
  cfg.lambda = 0.0;
  const LossBreakdown full = model_loss(model, cdred, batch, ctx, cfg, nullptr);
  const LossBreakdown one = model_loss(model, cdred, first_step(batch), first_step(ctx), cfg, nullptr);
  CHECK(full.consistency == doctest::Approx(one.consistency));
  CHECK(full.td == doctest::Approx(one.td));
  CHECK(full.cdred == doctest::Approx(one.cdred));
  CHECK(policy_loss(model, ctx, cfg, nullptr) == doctest::Approx(policy_loss(model, first_step(ctx), cfg, nullptr)));
}

TEST_CASE("one-step model loss equals its hand-computed parts") {
  WorldModel model(small_world());
  reward::CdredModel cdred = small_cdred();
  Rng rng(41);
  const buffers::SegmentBatch batch = random_batch(1, 4, 2, rng);
  const LossConfig cfg;
  const UpdateContext ctx = prepare_update(model, cdred, batch, cfg, rng);
  const LossBreakdown lb = model_loss(model, cdred, batch, ctx, cfg, nullptr);

  const BinGrid grid = model.grid();
  double consistency = 0.0, ce = 0.0;
  Matrix z = model.encode(batch.obs[0]);
  for (int t = 0; t < 2; ++t) {
    const double w = std::pow(cfg.lambda, t);
    const auto ts = static_cast<std::size_t>(t);
    const Matrix pred = model.latent_step(z, batch.actions[ts]);
    const QEstimate q = model.q_value(ctx.rollout_latents[ts], batch.actions[ts], HeadSet::kOnline);
    for (int c = 0; c < 4; ++c) {
      consistency += w * (pred.col(c) - ctx.next_latents[ts].col(c)).squaredNorm() / 4.0;
      const Vector target = two_hot_encode(ctx.td_targets[ts](c), grid);
      for (int i = 0; i < 3; ++i) {
        const Vector logp = log_softmax(q.logits[static_cast<std::size_t>(i)].col(c));
        ce -= w * target.dot(logp) / 4.0 / 3.0;
      }
    }
    z = pred;
  }
  CHECK(lb.consistency == doctest::Approx(consistency).epsilon(1e-12));
  CHECK(lb.td == doctest::Approx(ce).epsilon(1e-12));
  CHECK(lb.cdred == doctest::Approx(cdred.cdred_loss(ctx.cdred, cfg.lambda, ctx.target_index, nullptr, nullptr).total));
  CHECK(lb.model == doctest::Approx(consistency + ce + lb.cdred));
}

TEST_CASE("policy loss with flat values") {
  WorldModel model(small_world());
  flatten_q_heads(model);
  reward::CdredModel cdred = small_cdred();
  Rng rng(42);
  const buffers::SegmentBatch batch = random_batch(2, 16, 8, rng);
  LossConfig cfg;
  cfg.beta = 0.0;
  const UpdateContext ctx = prepare_update(model, cdred, batch, cfg, rng);
  CHECK(std::abs(policy_loss(model, ctx, cfg, nullptr)) < 1e-12);

  // Entropy-only descent widens the policy.
  cfg.beta = 1.0;
  auto mean_log_std = [&] {
    Matrix mean, log_std;
    model.policy_distribution(ctx.rollout_latents[0], &mean, &log_std);
    return log_std.mean();
  };
  const double before = mean_log_std();
  nn::AdamState state = nn::AdamState::for_params(model.policy().params());
  for (int step = 0; step < 100; ++step) {
    WorldGradients g = WorldGradients::zeros_for(model, cdred);
    policy_loss(model, ctx, cfg, &g);
    nn::adam_step(model.policy().params(), g.policy, state, 1e-2);
  }
  CHECK(mean_log_std() > before + 0.5);
}
