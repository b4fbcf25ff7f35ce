#include "cdred/reward/cdred_model.h"

#include <algorithm>
#include <cmath>

#include "cdred/common/error.h"

namespace cdred::reward {
namespace {

std::uint64_t target_seed(std::uint64_t seed, int k) {
  return mix_seed(seed, 1000 + static_cast<std::uint64_t>(k));
}

}  // namespace

void CdredConfig::validate() const {
  if (latent_dim <= 0 || action_dim <= 0 || hidden_dim <= 0 || embed_dim <= 0) {
    throw ConfigError("cdred: widths must be positive");
  }
  if (hidden_layers < 0) throw ConfigError("cdred: hidden_layers must be >= 0");
  if (ensemble < 1) throw ConfigError("cdred: ensemble size K must be >= 1");
  if (!(zeta > 0.0 && zeta <= 1.0)) throw ConfigError("cdred: zeta must lie in (0, 1]");
  if (!(sigma >= 0.0)) throw ConfigError("cdred: sigma must be >= 0");
  if (!(alpha >= 0.0 && alpha <= 1.0)) throw ConfigError("cdred: alpha must lie in [0, 1]");
}

TargetMoments target_moments(const std::vector<Matrix>& outputs) {
  if (outputs.empty()) throw DimensionError("target_moments: empty ensemble");
  TargetMoments m{Matrix::Zero(outputs[0].rows(), outputs[0].cols()),
                  Matrix::Zero(outputs[0].rows(), outputs[0].cols())};
  for (const auto& o : outputs) {
    m.mean += o;
    m.second += o.cwiseAbs2();
  }
  const double inv_k = 1.0 / static_cast<double>(outputs.size());
  m.mean *= inv_k;
  m.second *= inv_k;
  return m;
}

Vector occurrence_estimate(const Matrix& pred, const TargetMoments& m, bool clamp) {
  if (pred.rows() != m.mean.rows() || pred.cols() != m.mean.cols()) {
    throw DimensionError("occurrence_estimate: prediction/moment shape mismatch");
  }
  const Eigen::ArrayXXd mu2 = m.mean.array().square();
  const Eigen::ArrayXXd denom = m.second.array() - mu2;
  Eigen::ArrayXXd ratio = (pred.array().square() - mu2) / denom;
  if (clamp) ratio = ratio.max(0.0).min(1.0);
  ratio = (denom < kDegenerateVariance).select(0.0, ratio);
  return ratio.colwise().mean().transpose().matrix();
}

Vector epsilon_correction(const Matrix& pred, const TargetMoments& m) {
  return occurrence_estimate(pred, m, true).array().sqrt().matrix();
}

Vector squared_distance(const Matrix& pred, const Matrix& mean) {
  return (pred - mean).colwise().squaredNorm().transpose();
}

Vector bonus(const Matrix& pred, const TargetMoments& m, double alpha) {
  return alpha * squared_distance(pred, m.mean) +
         (1.0 - alpha) * epsilon_correction(pred, m);
}

double apply_g(GFunction g, double x) {
  return g == GFunction::kExp ? std::exp(x) : x;
}

Vector combine_reward(const Vector& bonus_expert, const Vector& bonus_behavioral,
                      double zeta, double sigma, GFunction g) {
  if (bonus_expert.size() != bonus_behavioral.size()) {
    throw DimensionError("combine_reward: bonus size mismatch");
  }
  Vector r(bonus_expert.size());
  for (Eigen::Index i = 0; i < r.size(); ++i) {
    r[i] = zeta * apply_g(g, -sigma * bonus_expert[i]) -
           (1.0 - zeta) * apply_g(g, -sigma * bonus_behavioral[i]);
  }
  return r;
}

CdredModel::CdredModel(const CdredConfig& config) : config_(config) {
  config_.validate();
  build_targets();
  Rng rng_e(mix_seed(config_.seed, 1));
  Rng rng_b(mix_seed(config_.seed, 2));
  expert_ = nn::Mlp(network_spec(), "cdred_expert", rng_e);
  behavioral_ = nn::Mlp(network_spec(), "cdred_behavioral", rng_b);
}

nn::MlpSpec CdredModel::network_spec() const {
  std::vector<int> hidden(static_cast<std::size_t>(config_.hidden_layers),
                          config_.hidden_dim);
  return nn::normed_mlp(input_dim(), hidden, config_.embed_dim,
                        nn::Activation::kNone, false);
}

void CdredModel::build_targets() {
  targets_.clear();
  for (int k = 0; k < config_.ensemble; ++k) {
    Rng rng(target_seed(config_.seed, k));
    nn::Mlp t(network_spec(), "cdred_target" + std::to_string(k), rng);
    t.set_trainable(false);
    targets_.push_back(std::move(t));
  }
}

Matrix CdredModel::target_output(int k, const Matrix& za) const {
  if (k < 0 || k >= static_cast<int>(targets_.size())) {
    throw ContractError("cdred: target index out of range");
  }
  return targets_[static_cast<std::size_t>(k)].forward(za);
}

std::vector<Matrix> CdredModel::target_outputs(const Matrix& za) const {
  std::vector<Matrix> out;
  out.reserve(targets_.size());
  for (const auto& t : targets_) out.push_back(t.forward(za));
  return out;
}

TargetMoments CdredModel::moments(const Matrix& za) const {
  return target_moments(target_outputs(za));
}

Matrix CdredModel::predict(Predictor which, const Matrix& za) const {
  return which == Predictor::kExpert ? expert_.forward(za) : behavioral_.forward(za);
}

Matrix CdredModel::target_mean(const Matrix& z, const Matrix& a) const {
  return moments(vstack(z, a)).mean;
}

Matrix CdredModel::target_second_moment(const Matrix& z, const Matrix& a) const {
  return moments(vstack(z, a)).second;
}

Vector CdredModel::epsilon_correction(const Matrix& z, const Matrix& a,
                                      Predictor which) const {
  const Matrix za = vstack(z, a);
  return reward::epsilon_correction(predict(which, za), moments(za));
}

Vector CdredModel::occurrence_estimator(const Matrix& z, const Matrix& a,
                                        Predictor which) const {
  const Matrix za = vstack(z, a);
  return occurrence_estimate(predict(which, za), moments(za), true);
}

Vector CdredModel::bonus(const Matrix& z, const Matrix& a, Predictor which) const {
  const Matrix za = vstack(z, a);
  return reward::bonus(predict(which, za), moments(za), config_.alpha);
}

RewardBreakdown CdredModel::reward(const Matrix& z, const Matrix& a) const {
  if (config_.mode != RewardMode::kCoupled) {
    throw ModeError("cdred: coupled reward requested in red-baseline mode");
  }
  const Matrix za = vstack(z, a);
  const TargetMoments m = moments(za);
  const Matrix fe = expert_.forward(za);
  const Matrix fb = behavioral_.forward(za);
  RewardBreakdown out;
  out.l2_expert = squared_distance(fe, m.mean);
  out.l2_behavioral = squared_distance(fb, m.mean);
  out.eps_expert = reward::epsilon_correction(fe, m);
  out.eps_behavioral = reward::epsilon_correction(fb, m);
  const double al = config_.alpha;
  out.bonus_expert = al * out.l2_expert + (1.0 - al) * out.eps_expert;
  out.bonus_behavioral = al * out.l2_behavioral + (1.0 - al) * out.eps_behavioral;
  out.reward = combine_reward(out.bonus_expert, out.bonus_behavioral, config_.zeta,
                              config_.sigma, config_.g);
  out.mean = m.mean;
  out.second_moment = m.second;
  return out;
}

Vector CdredModel::red_reward(const Matrix& z, const Matrix& a) const {
  if (config_.mode != RewardMode::kRedBaseline) {
    throw ModeError("cdred: red_reward requested in coupled mode");
  }
  const Matrix za = vstack(z, a);
  const Matrix fe = expert_.forward(za);
  Vector dev = Vector::Zero(za.cols());
  for (const auto& t : targets_) dev += squared_distance(fe, t.forward(za));
  dev /= static_cast<double>(targets_.size());
  return (-config_.sigma * dev.array()).exp().matrix();
}

Vector CdredModel::evaluate(const Matrix& z, const Matrix& a) const {
  return config_.mode == RewardMode::kCoupled ? reward(z, a).reward : red_reward(z, a);
}

CdredLoss CdredModel::cdred_loss(const CdredBatch& batch, double lambda, int k,
                                 nn::ParamStore* expert_grads,
                                 nn::ParamStore* behavioral_grads) const {
  if (k < 0 || k >= config_.ensemble) {
    throw ContractError("cdred_loss: target index out of range");
  }
  const bool use_behavioral = config_.mode == RewardMode::kCoupled;
  if (!batch.expert.empty() && use_behavioral && !batch.behavioral.empty() &&
      batch.expert.size() != batch.behavioral.size()) {
    throw BatchError("cdred_loss: expert and behavioral horizons differ");
  }
  const nn::Mlp& target = targets_[static_cast<std::size_t>(k)];

  auto term = [&](const std::vector<Matrix>& steps, const nn::Mlp& predictor,
                  nn::ParamStore* grads) {
    double loss = 0.0;
    double w = 1.0;
    for (const auto& za : steps) {
      if (za.cols() > 0) {
        nn::MlpCache cache;
        const Matrix f = predictor.forward(za, nn::Mode::kEval, nullptr,
                                           grads != nullptr ? &cache : nullptr);
        const Matrix diff = f - target.forward(za);
        const double n = static_cast<double>(za.cols());
        loss += w * diff.squaredNorm() / n;
        if (grads != nullptr) {
          predictor.backward(cache, (2.0 * w / n) * diff, grads);
        }
      }
      w *= lambda;
    }
    return loss;
  };

  CdredLoss out;
  out.expert = term(batch.expert, expert_, expert_grads);
  if (use_behavioral) out.behavioral = term(batch.behavioral, behavioral_, behavioral_grads);
  out.total = out.expert + out.behavioral;
  return out;
}

void CdredModel::save(nn::Checkpoint& ck, const std::string& prefix) const {
  ck.set_spec_hash(prefix + "/network", network_spec().hash());
  ck.set_integer(prefix + "/seed", config_.seed);
  ck.set_integer(prefix + "/ensemble", static_cast<std::uint64_t>(config_.ensemble));
  for (int k = 0; k < config_.ensemble; ++k) {
    ck.set_integer(prefix + "/target_seed/" + std::to_string(k),
                   target_seed(config_.seed, k));
  }
  ck.add_store(prefix + "/expert", expert_.params());
  ck.add_store(prefix + "/behavioral", behavioral_.params());
}

void CdredModel::load(const nn::Checkpoint& ck, const std::string& prefix) {
  ck.expect_spec_hash(prefix + "/network", network_spec().hash());
  if (ck.integer(prefix + "/ensemble") != static_cast<std::uint64_t>(config_.ensemble)) {
    throw FormatError("cdred: checkpoint ensemble size differs from config");
  }
  config_.seed = ck.integer(prefix + "/seed");
  build_targets();
  ck.load_store(prefix + "/expert", expert_.params());
  ck.load_store(prefix + "/behavioral", behavioral_.params());
}

std::string to_string(GFunction g) { return g == GFunction::kExp ? "exp" : "linear"; }

std::string to_string(RewardMode m) {
  return m == RewardMode::kCoupled ? "cdred" : "red-baseline";
}

GFunction parse_g(const std::string& s) {
  if (s == "linear") return GFunction::kLinear;
  if (s == "exp") return GFunction::kExp;
  throw ConfigError("unknown g function '" + s + "' (expected linear|exp)");
}

RewardMode parse_mode(const std::string& s) {
  if (s == "cdred" || s == "coupled") return RewardMode::kCoupled;
  if (s == "red-baseline" || s == "red") return RewardMode::kRedBaseline;
  throw ConfigError("unknown mode '" + s + "' (expected cdred|red-baseline)");
}

}  // namespace cdred::reward
