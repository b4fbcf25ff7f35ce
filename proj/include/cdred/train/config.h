#pragma once

#include <cstdint>
#include <functional>
#include <string>
#include <utility>
#include <vector>

#include "cdred/planner/mppi.h"
#include "cdred/reward/cdred_model.h"
#include "cdred/world/losses.h"
#include "cdred/world/world_model.h"

namespace cdred::train {

enum class EvalMode { kPlan, kPolicy };

struct TrainConfig {
  std::string env = "point-mass-2d";
  std::uint64_t seed = 0;
  std::int64_t total_steps = 20000;
  int updates_per_step = 1;
  int batch_size = 256;
  int horizon = 3;
  double lambda = 0.5;
  double gamma = 0.99;
  double beta = 1e-4;
  double zeta = 0.8;
  double sigma = 1.0;
  double alpha = 0.9;
  int ensemble = 5;
  int embed_dim = 64;
  reward::GFunction g = reward::GFunction::kLinear;
  reward::RewardMode mode = reward::RewardMode::kCoupled;
  std::string expert_path;
  int expert_episodes = 100;
  std::int64_t eval_interval = 2000;
  int eval_episodes = 20;
  EvalMode eval_mode = EvalMode::kPlan;
  double p_tremble = 0.0;
  std::int64_t scheduler_step = 500000;
  std::int64_t seed_steps = 1000;

  double lr = 3e-4;
  double lr_gamma = 0.1;
  double tau = 0.01;
  double expert_mix = 0.5;
  double grad_clip = 0.0;
  std::int64_t buffer_capacity = 1000000;
  std::int64_t log_interval = 500;
  std::int64_t checkpoint_interval = 0;

  int latent_dim = 512;
  int enc_dim = 256;
  int mlp_dim = 512;
  int cdred_hidden = 512;
  int num_q = 5;
  int num_bins = 101;
  int simnorm_group = 8;

  int plan_samples = 512;
  int plan_policy_samples = 24;
  int plan_iterations = 6;
  int plan_elites = 64;
  double plan_temperature = 0.5;
  double plan_min_std = 0.05;
  double plan_max_std = 2.0;
  bool plan_telemetry = false;

  // Throws ConfigError naming the first out-of-range key.
  void validate() const;

  world::WorldModelConfig world_config(int obs_dim, int action_dim) const;
  reward::CdredConfig cdred_config(int action_dim) const;
  world::LossConfig loss_config() const;
  planner::PlannerConfig planner_config() const;

  std::uint64_t hash() const;
};

struct ConfigKey {
  std::string name;
  std::string range;
  std::string help;
  std::function<void(TrainConfig&, const std::string&)> set;
  std::function<std::string(const TrainConfig&)> get;
};

const std::vector<ConfigKey>& config_keys();
bool is_config_key(const std::string& name);

// Applies one key=value assignment. Throws ConfigError on unknown keys or
// unparseable values.
void apply_override(TrainConfig& config, const std::string& assignment);
void apply_overrides(TrainConfig& config, const std::vector<std::string>& assignments);

// Flat "key = value" text, one key per line; '#' starts a comment. Keys not
// mentioned keep their defaults.
TrainConfig parse_config(const std::string& text);
TrainConfig load_config(const std::string& path);
std::string format_config(const TrainConfig& config);
void save_config(const TrainConfig& config, const std::string& path);

std::string to_string(EvalMode mode);
EvalMode parse_eval_mode(const std::string& text);

}  // namespace cdred::train
