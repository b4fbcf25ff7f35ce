#include "cdred/world/world_model.h"

#include <algorithm>

#include "cdred/common/error.h"
#include "cdred/nn/optim.h"

namespace cdred::world {

void WorldModelConfig::validate() const {
  if (obs_dim <= 0 || action_dim <= 0) throw ConfigError("world model: widths must be positive");
  if (latent_dim <= 0 || enc_dim <= 0 || mlp_dim <= 0) {
    throw ConfigError("world model: hidden widths must be positive");
  }
  if (simnorm_group <= 0 || latent_dim % simnorm_group != 0) {
    throw ConfigError("world model: latent_dim must be a multiple of the simnorm group");
  }
  if (num_q < 1) throw ConfigError("world model: need at least one Q head");
  if (num_bins < 2 || !(vmax > vmin)) throw ConfigError("world model: invalid bin grid");
  if (!(log_std_max > log_std_min)) throw ConfigError("world model: invalid log-std range");
}

WorldModel::WorldModel(const WorldModelConfig& config) : config_(config) {
  config_.validate();
  const int za = config_.latent_dim + config_.action_dim;
  const int h = config_.mlp_dim;

  Rng rng(mix_seed(config_.seed, 21));
  nn::MlpSpec enc = nn::normed_mlp(config_.obs_dim, {config_.enc_dim}, config_.latent_dim,
                                   nn::Activation::kSimNorm, true);
  enc.simnorm_group = config_.simnorm_group;
  encoder_ = nn::Mlp(enc, "encoder", rng);

  nn::MlpSpec dyn = nn::normed_mlp(za, {h, h}, config_.latent_dim,
                                   nn::Activation::kSimNorm, true);
  dyn.simnorm_group = config_.simnorm_group;
  dynamics_ = nn::Mlp(dyn, "dynamics", rng);

  policy_ = nn::Mlp(nn::normed_mlp(config_.latent_dim, {h, h}, 2 * config_.action_dim,
                                   nn::Activation::kNone, false),
                    "policy", rng);

  const nn::MlpSpec qspec = nn::normed_mlp(za, {h, h}, config_.num_bins,
                                           nn::Activation::kNone, false, config_.q_dropout);
  for (int i = 0; i < config_.num_q; ++i) {
    nn::Mlp qi(qspec, "q" + std::to_string(i), rng);
    qi.zero_head();
    nn::Mlp ti = qi;
    ti.set_trainable(false);
    q_.push_back(std::move(qi));
    q_target_.push_back(std::move(ti));
  }
}

Matrix WorldModel::encode(const Matrix& obs) const { return encoder_.forward(obs); }

Matrix WorldModel::latent_step(const Matrix& z, const Matrix& a) const {
  if (z.cols() != a.cols()) throw DimensionError("latent_step: batch mismatch");
  return dynamics_.forward(vstack(z, a));
}

QEstimate WorldModel::q_value(const Matrix& z, const Matrix& a, HeadSet heads,
                              nn::Mode mode, Rng* rng) const {
  if (z.cols() != a.cols()) throw DimensionError("q_value: batch mismatch");
  const auto& set = heads == HeadSet::kOnline ? q_ : q_target_;
  const Matrix za = vstack(z, a);
  const BinGrid g = grid();
  QEstimate out;
  out.head_values.resize(config_.num_q, z.cols());
  for (int i = 0; i < config_.num_q; ++i) {
    Matrix logits = set[static_cast<std::size_t>(i)].forward(za, mode, rng);
    out.head_values.row(i) = decode_logits(logits, g).transpose();
    out.logits.push_back(std::move(logits));
  }
  out.value = out.head_values.colwise().mean().transpose();
  return out;
}

Vector WorldModel::bootstrap_value(const Matrix& z, const Matrix& a) const {
  const QEstimate q = q_value(z, a, HeadSet::kTarget);
  if (config_.num_q < 2) return q.value;
  Vector out(z.cols());
  std::vector<double> col(static_cast<std::size_t>(config_.num_q));
  for (Eigen::Index c = 0; c < z.cols(); ++c) {
    for (int i = 0; i < config_.num_q; ++i) col[static_cast<std::size_t>(i)] = q.head_values(i, c);
    std::partial_sort(col.begin(), col.begin() + 2, col.end());
    out[c] = 0.5 * (col[0] + col[1]);
  }
  return out;
}

void WorldModel::policy_distribution(const Matrix& z, Matrix* mean, Matrix* log_std) const {
  const Matrix out = policy_.forward(z);
  const int ad = config_.action_dim;
  *mean = out.topRows(ad);
  *log_std = squash_log_std(out.bottomRows(ad), config_.log_std_min, config_.log_std_max);
}

PolicyOutput WorldModel::policy_sample(const Matrix& z, PolicyMode mode, Rng& rng) const {
  Matrix mean, log_std;
  policy_distribution(z, &mean, &log_std);
  if (mode == PolicyMode::kDeterministic) {
    PolicyOutput out = tanh_gaussian(mean, log_std, Matrix::Zero(mean.rows(), mean.cols()));
    return out;
  }
  return tanh_gaussian(mean, log_std, standard_normal(mean.rows(), mean.cols(), rng));
}

void WorldModel::soft_update_targets(double tau) {
  for (int i = 0; i < config_.num_q; ++i) {
    nn::soft_update(q_[static_cast<std::size_t>(i)].params(),
                    q_target_[static_cast<std::size_t>(i)].params(), tau);
  }
}

void WorldModel::save(nn::Checkpoint& ck, const std::string& prefix) const {
  ck.set_spec_hash(prefix + "/encoder", encoder_.spec().hash());
  ck.set_spec_hash(prefix + "/dynamics", dynamics_.spec().hash());
  ck.set_spec_hash(prefix + "/policy", policy_.spec().hash());
  ck.set_spec_hash(prefix + "/q", q_.front().spec().hash());
  ck.add_store(prefix + "/encoder", encoder_.params());
  ck.add_store(prefix + "/dynamics", dynamics_.params());
  ck.add_store(prefix + "/policy", policy_.params());
  for (std::size_t i = 0; i < q_.size(); ++i) {
    ck.add_store(prefix + "/q", q_[i].params());
    ck.add_store(prefix + "/q_target", q_target_[i].params());
  }
}

void WorldModel::load(const nn::Checkpoint& ck, const std::string& prefix) {
  ck.expect_spec_hash(prefix + "/encoder", encoder_.spec().hash());
  ck.expect_spec_hash(prefix + "/dynamics", dynamics_.spec().hash());
  ck.expect_spec_hash(prefix + "/policy", policy_.spec().hash());
  ck.expect_spec_hash(prefix + "/q", q_.front().spec().hash());
  ck.load_store(prefix + "/encoder", encoder_.params());
  ck.load_store(prefix + "/dynamics", dynamics_.params());
  ck.load_store(prefix + "/policy", policy_.params());
  for (std::size_t i = 0; i < q_.size(); ++i) {
    ck.load_store(prefix + "/q", q_[i].params());
    ck.load_store(prefix + "/q_target", q_target_[i].params());
  }
}

}  // namespace cdred::world
