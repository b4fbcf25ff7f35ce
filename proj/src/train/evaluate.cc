#include "cdred/train/evaluate.h"

#include <cmath>
#include <fstream>
#include <sstream>

#include "cdred/common/error.h"
#include "cdred/envs/expert.h"
#include "cdred/envs/tremble.h"

namespace cdred::train {
namespace {

std::unique_ptr<envs::Environment> build_env(const std::string& name, double p_tremble) {
  auto env = envs::make_env(name);
  if (p_tremble > 0.0) return std::make_unique<envs::TrembleEnv>(std::move(env), p_tremble);
  return env;
}

}  // namespace

Vector ExpertController::act(const Vector& obs) { return envs::expert_action(env_, obs); }

Vector RandomController::act(const Vector&) {
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  Vector a(action_dim_);
  for (int i = 0; i < action_dim_; ++i) a(i) = u(rng_);
  return a;
}

void PlanController::reset(std::uint64_t episode_seed) {
  warm_ = {};
  rng_.seed(episode_seed);
}

Vector PlanController::act(const Vector& obs) {
  planner::PlanResult r =
      planner::plan(agent_, obs, warm_.empty() ? nullptr : &warm_, config_, mode_, rng_);
  warm_ = planner::shift_solution(r.solution, config_);
  return r.action;
}

EvalResult summarize(const std::vector<double>& returns, const std::vector<bool>& success) {
  EvalResult r;
  r.returns = returns;
  if (returns.empty()) return r;
  double sum = 0.0;
  for (double v : returns) sum += v;
  r.mean = sum / static_cast<double>(returns.size());
  double sq = 0.0;
  for (double v : returns) sq += (v - r.mean) * (v - r.mean);
  r.std = returns.size() > 1 ? std::sqrt(sq / static_cast<double>(returns.size())) : 0.0;
  if (!success.empty()) {
    std::size_t hits = 0;
    for (bool s : success) hits += s ? 1 : 0;
    r.success_rate = static_cast<double>(hits) / static_cast<double>(success.size());
  }
  return r;
}

buffers::ReplayBuffer collect_episodes(const std::string& env_name, Controller& controller,
                                       int episodes, std::uint64_t seed, double p_tremble,
                                       EvalResult* result) {
  auto env = build_env(env_name, p_tremble);
  const envs::EnvSpec& spec = env->spec();
  buffers::ReplayBuffer buffer(spec.obs_dim, spec.action_dim);
  std::vector<double> returns;
  std::vector<bool> success;
  for (int ep = 0; ep < episodes; ++ep) {
    const std::uint64_t ep_seed = mix_seed(seed, static_cast<std::uint64_t>(ep));
    Vector obs = env->reset(ep_seed);
    controller.reset(mix_seed(ep_seed, 1));
    double total = 0.0;
    for (int t = 0;; ++t) {
      const envs::StepResult sr = env->step(controller.act(obs));
      buffer.add({obs, env->last_action(), sr.reward, sr.obs, sr.terminal, ep, t});
      total += sr.reward;
      obs = sr.obs;
      if (sr.terminal || sr.truncated) break;
    }
    buffer.close_episode();
    returns.push_back(total);
    success.push_back(env->success());
  }
  if (result != nullptr) *result = summarize(returns, success);
  return buffer;
}

EvalResult evaluate_controller(const std::string& env, Controller& controller, int episodes,
                               std::uint64_t seed, double p_tremble) {
  EvalResult r;
  collect_episodes(env, controller, episodes, seed, p_tremble, &r);
  return r;
}

EvalResult evaluate_agent(const Agent& agent, int episodes, EvalMode mode, std::uint64_t seed) {
  const TrainConfig& c = agent.config();
  if (mode == EvalMode::kPolicy) {
    PolicyController pc(agent);
    return evaluate_controller(c.env, pc, episodes, seed, c.p_tremble);
  }
  PlanController pc(agent, c.planner_config());
  return evaluate_controller(c.env, pc, episodes, seed, c.p_tremble);
}

double read_baseline(const std::string& path, const std::string& env) {
  std::ifstream in(path);
  if (!in) throw FormatError("cannot read baseline file " + path);
  std::string line;
  while (std::getline(in, line)) {
    const auto hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    std::istringstream ss(line);
    std::string name;
    double value = 0.0;
    if (ss >> name >> value && name == env) return value;
  }
  throw FormatError("no baseline for '" + env + "' in " + path);
}

}  // namespace cdred::train
