#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "cdred/common/types.h"
#include "cdred/nn/checkpoint.h"
#include "cdred/nn/mlp.h"

namespace cdred::reward {

enum class GFunction { kLinear, kExp };
enum class RewardMode { kCoupled, kRedBaseline };
enum class Predictor { kExpert, kBehavioral };

struct CdredConfig {
  int latent_dim = 512;
  int action_dim = 1;
  int hidden_dim = 512;
  int hidden_layers = 2;
  int embed_dim = 64;  // p
  int ensemble = 5;    // K
  double zeta = 0.8;
  double sigma = 1.0;
  double alpha = 0.9;
  GFunction g = GFunction::kLinear;
  RewardMode mode = RewardMode::kCoupled;
  std::uint64_t seed = 0;

  // Throws ConfigError for out-of-range hyperparameters.
  void validate() const;
};

// Ensemble statistics, each p x batch.
struct TargetMoments {
  Matrix mean;    // mu
  Matrix second;  // B2
};

// Denominators B2 - mu^2 below this count as degenerate.
inline constexpr double kDegenerateVariance = 1e-8;

TargetMoments target_moments(const std::vector<Matrix>& outputs);

// Occurrence statistic y = mean_d [(f_d^2 - mu_d^2) / (B2_d - mu_d^2)].
// With `clamp`, each per-dimension ratio is clamped to [0, 1] first.
// Degenerate dimensions contribute 0 either way.
Vector occurrence_estimate(const Matrix& pred, const TargetMoments& m,
                           bool clamp = true);
// sqrt of the clamped occurrence statistic: the sqrt(1/n) correction.
Vector epsilon_correction(const Matrix& pred, const TargetMoments& m);
// ||f - mu||^2 per column.
Vector squared_distance(const Matrix& pred, const Matrix& mean);
// alpha * ||f - mu||^2 + (1 - alpha) * eps.
Vector bonus(const Matrix& pred, const TargetMoments& m, double alpha);

double apply_g(GFunction g, double x);
// zeta * g(-sigma b_expert) - (1 - zeta) * g(-sigma b_behavioral).
Vector combine_reward(const Vector& bonus_expert, const Vector& bonus_behavioral,
                      double zeta, double sigma, GFunction g);

// Per-column reward and every intermediate it was assembled from.
struct RewardBreakdown {
  Vector reward;
  Vector bonus_expert;
  Vector bonus_behavioral;
  Vector l2_expert;
  Vector l2_behavioral;
  Vector eps_expert;
  Vector eps_behavioral;
  Matrix mean;
  Matrix second_moment;
};

// Latent state-action inputs for the coupled distillation loss, one matrix
// (latent+action rows x samples) per horizon step and source.
struct CdredBatch {
  std::vector<Matrix> expert;
  std::vector<Matrix> behavioral;
};

struct CdredLoss {
  double total = 0.0;
  double expert = 0.0;
  double behavioral = 0.0;
};

// Frozen random target ensemble shared by an expert predictor and a
// behavioral predictor, all mapping (z, a) to R^p.
class CdredModel {
 public:
  CdredModel() = default;
  explicit CdredModel(const CdredConfig& config);

  const CdredConfig& config() const { return config_; }
  CdredConfig& mutable_config() { return config_; }
  int input_dim() const { return config_.latent_dim + config_.action_dim; }

  Matrix target_output(int k, const Matrix& za) const;
  std::vector<Matrix> target_outputs(const Matrix& za) const;
  TargetMoments moments(const Matrix& za) const;
  Matrix predict(Predictor which, const Matrix& za) const;

  Matrix target_mean(const Matrix& z, const Matrix& a) const;
  Matrix target_second_moment(const Matrix& z, const Matrix& a) const;
  Vector epsilon_correction(const Matrix& z, const Matrix& a, Predictor which) const;
  Vector occurrence_estimator(const Matrix& z, const Matrix& a, Predictor which) const;
  Vector bonus(const Matrix& z, const Matrix& a, Predictor which) const;

  // Coupled reward. Throws ModeError in red-baseline mode.
  RewardBreakdown reward(const Matrix& z, const Matrix& a) const;
  // exp(-sigma * mean_k ||f_expert - f_k||^2). Throws ModeError in coupled mode.
  Vector red_reward(const Matrix& z, const Matrix& a) const;
  // Mode-dispatched scalar reward per column.
  Vector evaluate(const Matrix& z, const Matrix& a) const;

  // Coupled distillation loss against target k, summed over the horizon with
  // weight lambda^t. Gradients (if requested) accumulate into the predictor
  // stores; inputs and targets are constants. In red-baseline mode only the
  // expert term is used. Throws BatchError on horizon mismatch and
  // ContractError for k outside [0, K).
  CdredLoss cdred_loss(const CdredBatch& batch, double lambda, int k,
                       nn::ParamStore* expert_grads,
                       nn::ParamStore* behavioral_grads) const;

  nn::Mlp& expert() { return expert_; }
  nn::Mlp& behavioral() { return behavioral_; }
  const nn::Mlp& expert() const { return expert_; }
  const nn::Mlp& behavioral() const { return behavioral_; }
  const std::vector<nn::Mlp>& targets() const { return targets_; }

  // Predictors are stored as arrays; targets as seeds + spec hash and
  // rebuilt on load.
  void save(nn::Checkpoint& ck, const std::string& prefix) const;
  void load(const nn::Checkpoint& ck, const std::string& prefix);

 private:
  nn::MlpSpec network_spec() const;
  void build_targets();

  CdredConfig config_;
  std::vector<nn::Mlp> targets_;
  nn::Mlp expert_;
  nn::Mlp behavioral_;
};

std::string to_string(GFunction g);
std::string to_string(RewardMode m);
GFunction parse_g(const std::string& s);
RewardMode parse_mode(const std::string& s);

}  // namespace cdred::reward
