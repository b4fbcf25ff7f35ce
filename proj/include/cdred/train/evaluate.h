#pragma once

#include <cstdint>
#include <limits>
#include <memory>
#include <string>
#include <vector>

#include "cdred/buffers/replay_buffer.h"
#include "cdred/envs/env.h"
#include "cdred/planner/mppi.h"
#include "cdred/train/agent.h"

namespace cdred::train {

class Controller {
 public:
  virtual ~Controller() = default;
  virtual void reset(std::uint64_t /*episode_seed*/) {}
  virtual Vector act(const Vector& obs) = 0;
};

class ExpertController : public Controller {
 public:
  explicit ExpertController(std::string env) : env_(std::move(env)) {}
  Vector act(const Vector& obs) override;

 private:
  std::string env_;
};

class RandomController : public Controller {
 public:
  explicit RandomController(int action_dim) : action_dim_(action_dim) {}
  void reset(std::uint64_t episode_seed) override { rng_.seed(episode_seed); }
  Vector act(const Vector& obs) override;

 private:
  int action_dim_;
  Rng rng_;
};

// Deterministic policy head.
class PolicyController : public Controller {
 public:
  explicit PolicyController(const Agent& agent) : agent_(agent) {}
  Vector act(const Vector& obs) override { return agent_.policy_act(obs); }

 private:
  const Agent& agent_;
};

// MPPI with warm starts; eval mode emits the refined mean.
class PlanController : public Controller {
 public:
  PlanController(const Agent& agent, planner::PlannerConfig config,
                 planner::PlanMode mode = planner::PlanMode::kEval)
      : agent_(agent), config_(config), mode_(mode) {}
  void reset(std::uint64_t episode_seed) override;
  Vector act(const Vector& obs) override;

 private:
  const Agent& agent_;
  planner::PlannerConfig config_;
  planner::PlanMode mode_;
  planner::PlanSolution warm_;
  Rng rng_;
};

struct EvalResult {
  double mean = 0.0;
  double std = 0.0;  // population std; 0 for one episode
  double success_rate = std::numeric_limits<double>::quiet_NaN();
  std::vector<double> returns;
};

EvalResult summarize(const std::vector<double>& returns, const std::vector<bool>& success);

// Episode i resets with mix_seed(seed, i). A positive p_tremble wraps the
// environment.
EvalResult evaluate_controller(const std::string& env, Controller& controller, int episodes,
                               std::uint64_t seed, double p_tremble = 0.0);

EvalResult evaluate_agent(const Agent& agent, int episodes, EvalMode mode, std::uint64_t seed);

// Rolls out the scripted expert and records the executed transitions.
buffers::ReplayBuffer collect_episodes(const std::string& env, Controller& controller,
                                       int episodes, std::uint64_t seed, double p_tremble,
                                       EvalResult* result = nullptr);

// Expert baseline returns per environment, "name value" lines.
double read_baseline(const std::string& path, const std::string& env);

}  // namespace cdred::train
