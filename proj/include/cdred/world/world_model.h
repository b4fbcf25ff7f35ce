#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "cdred/common/types.h"
#include "cdred/nn/checkpoint.h"
#include "cdred/nn/mlp.h"
#include "cdred/world/policy.h"
#include "cdred/world/two_hot.h"

namespace cdred::world {

struct WorldModelConfig {
  int obs_dim = 0;
  int action_dim = 0;
  int latent_dim = 512;
  int enc_dim = 256;
  int mlp_dim = 512;
  int num_q = 5;
  int num_bins = 101;
  double vmin = -10.0;
  double vmax = 10.0;
  int simnorm_group = 8;
  double q_dropout = 0.01;
  double log_std_min = -10.0;
  double log_std_max = 2.0;
  std::uint64_t seed = 0;

  void validate() const;
  BinGrid grid() const { return BinGrid{num_bins, vmin, vmax}; }
};

enum class HeadSet { kOnline, kTarget };

struct QEstimate {
  Vector value;               // mean over heads of the decoded values
  Matrix head_values;         // num_q x batch
  std::vector<Matrix> logits; // per head, bins x batch
};

// Decoder-free latent model: encoder h, dynamics d, discrete-bin Q ensemble
// with frozen target copies, and a squashed-Gaussian policy prior.
class WorldModel {
 public:
  WorldModel() = default;
  explicit WorldModel(const WorldModelConfig& config);

  const WorldModelConfig& config() const { return config_; }
  BinGrid grid() const { return config_.grid(); }

  // obs_dim x B -> latent_dim x B, rows grouped onto simplices.
  Matrix encode(const Matrix& obs) const;
  Matrix latent_step(const Matrix& z, const Matrix& a) const;

  QEstimate q_value(const Matrix& z, const Matrix& a, HeadSet heads,
                    nn::Mode mode = nn::Mode::kEval, Rng* rng = nullptr) const;
  // Mean of the two lowest target-head values (all heads when num_q < 2).
  Vector bootstrap_value(const Matrix& z, const Matrix& a) const;

  // Splits the policy head output into mean and squashed log-std.
  void policy_distribution(const Matrix& z, Matrix* mean, Matrix* log_std) const;
  PolicyOutput policy_sample(const Matrix& z, PolicyMode mode, Rng& rng) const;

  void soft_update_targets(double tau);

  nn::Mlp& encoder() { return encoder_; }
  nn::Mlp& dynamics() { return dynamics_; }
  nn::Mlp& policy() { return policy_; }
  nn::Mlp& q(int i) { return q_.at(static_cast<std::size_t>(i)); }
  nn::Mlp& q_target(int i) { return q_target_.at(static_cast<std::size_t>(i)); }
  const nn::Mlp& encoder() const { return encoder_; }
  const nn::Mlp& dynamics() const { return dynamics_; }
  const nn::Mlp& policy() const { return policy_; }
  const nn::Mlp& q(int i) const { return q_.at(static_cast<std::size_t>(i)); }
  const nn::Mlp& q_target(int i) const { return q_target_.at(static_cast<std::size_t>(i)); }

  void save(nn::Checkpoint& ck, const std::string& prefix) const;
  void load(const nn::Checkpoint& ck, const std::string& prefix);

 private:
  WorldModelConfig config_;
  nn::Mlp encoder_;
  nn::Mlp dynamics_;
  nn::Mlp policy_;
  std::vector<nn::Mlp> q_;
  std::vector<nn::Mlp> q_target_;
};

}  // namespace cdred::world
