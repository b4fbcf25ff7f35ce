#include "cdred/train/trainer.h"

#include <filesystem>
#include <fstream>
#include <memory>

#include "cdred/buffers/traj_io.h"
#include "cdred/common/error.h"
#include "cdred/envs/tremble.h"
#include "cdred/train/agent.h"

namespace cdred::train {
namespace fs = std::filesystem;

buffers::ReplayBuffer load_expert(const TrainConfig& config) {
  const envs::EnvSpec spec = envs::env_spec(config.env);
  if (config.expert_path.empty()) throw FormatError("expert_path is not set");
  buffers::ReplayBuffer expert = buffers::load(config.expert_path, spec.obs_dim, spec.action_dim);
  if (expert.episode_count() < static_cast<std::size_t>(config.expert_episodes)) {
    throw FormatError("expert file " + config.expert_path + " holds " +
                      std::to_string(expert.episode_count()) + " episodes, " +
                      std::to_string(config.expert_episodes) + " requested");
  }
  expert.truncate_episodes(static_cast<std::size_t>(config.expert_episodes));
  return expert;
}

namespace {

struct Window {
  RunningMean model, consistency, td, cdred, policy, reward_expert, reward_behavioral;
  GradNormWindow grad;

  void add(const UpdateStats& s) {
    model.add(s.loss.model);
    consistency.add(s.loss.consistency);
    td.add(s.loss.td);
    cdred.add(s.loss.cdred);
    policy.add(s.loss.policy);
    reward_expert.add(s.loss.reward_expert_mean);
    reward_behavioral.add(s.loss.reward_behavioral_mean);
    grad.add(s.grad_norm);
  }

  void fill(MetricsRow& row) const {
    row.model_loss = model.mean();
    row.consistency_loss = consistency.mean();
    row.td_loss = td.mean();
    row.cdred_loss = cdred.mean();
    row.policy_loss = policy.mean();
    row.reward_expert_mean = reward_expert.mean();
    row.reward_behavioral_mean = reward_behavioral.mean();
    if (grad.count() > 0) {
      row.grad_norm_mean = grad.mean();
      row.grad_norm_max = grad.max();
    }
  }

  void reset() { *this = Window{}; }
};

std::string ckpt_path(const std::string& dir, std::int64_t step) {
  return (fs::path(dir) / ("ckpt_" + std::to_string(step))).string();
}

}  // namespace

TrainResult train(const TrainConfig& config, const TrainOptions& options) {
  config.validate();
  const bool to_disk = !options.run_dir.empty();
  const envs::EnvSpec spec = envs::env_spec(config.env);

  buffers::ReplayBuffer expert_owned(spec.obs_dim, spec.action_dim);
  const buffers::ReplayBuffer* expert = options.expert;
  if (expert == nullptr) {
    expert_owned = load_expert(config);
    expert = &expert_owned;
  } else if (expert->obs_dim() != spec.obs_dim || expert->action_dim() != spec.action_dim) {
    throw FormatError("expert buffer widths do not match " + config.env);
  }
  if (expert->valid_starts(config.horizon) == 0) {
    throw FormatError("expert data has no segment of horizon " + std::to_string(config.horizon));
  }

  std::unique_ptr<MetricsWriter> writer;
  std::unique_ptr<std::ofstream> telemetry;
  if (to_disk) {
    fs::create_directories(options.run_dir);
    save_config(config, (fs::path(options.run_dir) / "config.cfg").string());
    writer = std::make_unique<MetricsWriter>((fs::path(options.run_dir) / "metrics.csv").string());
    if (config.plan_telemetry) {
      telemetry = std::make_unique<std::ofstream>(fs::path(options.run_dir) / "planner.csv");
      *telemetry << "step,elite_return_mean,elite_return_max,final_std_norm\n";
    }
  }

  TrainResult result;
  Agent agent(config, spec.obs_dim, spec.action_dim);
  auto save_ckpt = [&](std::int64_t step) {
    if (!to_disk) return;
    const std::string path = ckpt_path(options.run_dir, step);
    agent.save(path, step);
    result.checkpoints.push_back(path);
  };
  save_ckpt(0);

  buffers::ReplayBuffer behavioral(spec.obs_dim, spec.action_dim,
                                   static_cast<std::size_t>(config.buffer_capacity));
  std::unique_ptr<envs::Environment> env = envs::make_env(config.env);
  if (config.p_tremble > 0.0) {
    env = std::make_unique<envs::TrembleEnv>(std::move(env), config.p_tremble);
  }

  Rng collect_rng(mix_seed(config.seed, 1));
  Rng update_rng(mix_seed(config.seed, 2));
  Rng plan_rng(mix_seed(config.seed, 3));
  const std::uint64_t eval_seed = mix_seed(config.seed, 4);
  const planner::PlannerConfig pc = config.planner_config();
  std::uniform_real_distribution<double> uniform(spec.action_low, spec.action_high);

  std::int64_t episode = 0;
  std::int64_t t_in_episode = 0;
  Vector obs = env->reset(mix_seed(config.seed, 10000));
  planner::PlanSolution warm;
  Window window;

  for (std::int64_t step = 0; step < config.total_steps; ++step) {
    Vector action(spec.action_dim);
    if (step < config.seed_steps) {
      for (int i = 0; i < spec.action_dim; ++i) action(i) = uniform(collect_rng);
    } else {
      planner::PlanResult pr = planner::plan(agent, obs, warm.empty() ? nullptr : &warm, pc,
                                             planner::PlanMode::kExplore, plan_rng);
      action = pr.action;
      warm = planner::shift_solution(pr.solution, pc);
      if (telemetry) {
        *telemetry << step << ',' << pr.telemetry.elite_mean.back() << ','
                   << pr.telemetry.elite_max.back() << ',' << pr.telemetry.final_std_norm << '\n';
      }
    }
    const envs::StepResult sr = env->step(action);
    buffers::Transition tr{obs,       env->last_action(), options.zero_task_reward ? 0.0 : sr.reward,
                           sr.obs,    sr.terminal,        episode,
                           t_in_episode};
    behavioral.add(tr);
    obs = sr.obs;
    ++t_in_episode;
    if (sr.terminal || sr.truncated) {
      behavioral.close_episode();
      ++episode;
      t_in_episode = 0;
      obs = env->reset(mix_seed(config.seed, 10000 + static_cast<std::uint64_t>(episode)));
      warm = {};
    }

    if (step >= config.seed_steps) {
      const bool behavioral_ready = behavioral.valid_starts(config.horizon) > 0;
      const double mix = behavioral_ready ? config.expert_mix : 1.0;
      for (int u = 0; u < config.updates_per_step; ++u) {
        const buffers::SegmentBatch batch = buffers::sample_segments(
            *expert, behavioral, config.batch_size, config.horizon, mix, update_rng);
        try {
          window.add(agent.update(batch, update_rng));
        } catch (const NumericalError& e) {
          if (to_disk) {
            save_ckpt(step + 1);
            std::ofstream diag(fs::path(options.run_dir) / "diagnostics.txt");
            diag << "step " << step + 1 << "\nupdate " << agent.updates() << "\n" << e.what()
                 << "\n";
          }
          throw;
        }
      }
    }

    const std::int64_t s = step + 1;
    const bool last = s == config.total_steps;
    const bool eval_due = last || (config.eval_interval > 0 && s % config.eval_interval == 0);
    const bool row_due = eval_due || s % config.log_interval == 0;
    if (row_due) {
      MetricsRow row;
      row.step = s;
      if (eval_due) {
        const EvalResult ev = evaluate_agent(agent, config.eval_episodes, config.eval_mode, eval_seed);
        row.episode_return_eval_mean = ev.mean;
        row.episode_return_eval_std = ev.std;
        if (last) {
          result.final_eval = ev;
          result.evaluated = true;
        }
      }
      window.fill(row);
      row.lr = agent.learning_rate();
      window.reset();
      result.rows.push_back(row);
      if (writer) writer->write(row);
      if (options.on_row) options.on_row(row);
    }
    if (eval_due || (config.checkpoint_interval > 0 && s % config.checkpoint_interval == 0)) {
      save_ckpt(s);
    }
    result.steps = s;
  }
  return result;
}

}  // namespace cdred::train
