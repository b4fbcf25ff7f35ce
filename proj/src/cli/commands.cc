#include "cdred/cli/commands.h"

#include <sys/wait.h>
#include <unistd.h>

#include <CLI11.hpp>
#include <algorithm>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <sstream>

#include "cdred/buffers/traj_io.h"
#include "cdred/cli/export.h"
#include "cdred/common/error.h"
#include "cdred/train/trainer.h"

namespace cdred::cli {
namespace fs = std::filesystem;

namespace {

int exit_code_for(const std::exception& e) {
  if (dynamic_cast<const ConfigError*>(&e) != nullptr) return kExitConfig;
  if (dynamic_cast<const NumericalError*>(&e) != nullptr) return kExitNumerical;
  if (dynamic_cast<const FormatError*>(&e) != nullptr ||
      dynamic_cast<const NotReadyError*>(&e) != nullptr ||
      dynamic_cast<const DimensionError*>(&e) != nullptr) {
    return kExitData;
  }
  return 1;
}

// Refuses to reuse a non-empty path unless forced; forced paths are removed.
void claim_output(const fs::path& path, bool force) {
  if (!fs::exists(path)) return;
  const bool empty_dir = fs::is_directory(path) && fs::is_empty(path);
  if (empty_dir) return;
  if (!force) throw ConfigError(path.string() + " already exists (use --force to overwrite)");
  fs::remove_all(path);
}

train::TrainConfig build_config(const std::string& path, const std::vector<std::string>& sets) {
  train::TrainConfig c = path.empty() ? train::TrainConfig{} : train::load_config(path);
  train::apply_overrides(c, sets);
  c.validate();
  return c;
}

std::string latest_checkpoint(const fs::path& run_dir, std::int64_t* step) {
  std::int64_t best = -1;
  for (const auto& entry : fs::directory_iterator(run_dir)) {
    const std::string name = entry.path().filename().string();
    if (name.rfind("ckpt_", 0) != 0) continue;
    try {
      std::size_t used = 0;
      const std::int64_t s = std::stoll(name.substr(5), &used);
      if (used == name.size() - 5 && s > best) best = s;
    } catch (const std::exception&) {
    }
  }
  if (best < 0) throw FormatError("no checkpoints in " + run_dir.string());
  *step = best;
  return (run_dir / ("ckpt_" + std::to_string(best))).string();
}

void print_row(const train::MetricsRow& r) {
  std::printf("step %lld", static_cast<long long>(r.step));
  if (!std::isnan(r.episode_return_eval_mean)) {
    std::printf("  eval %.2f +- %.2f", r.episode_return_eval_mean, r.episode_return_eval_std);
  }
  if (!std::isnan(r.model_loss)) {
    std::printf("  model %.4f  policy %.4f  grad %.3f/%.3f", r.model_loss, r.policy_loss,
                r.grad_norm_mean, r.grad_norm_max);
  }
  std::printf("\n");
  std::fflush(stdout);
}

int cmd_gen_expert(const std::string& env, int episodes, std::uint64_t seed,
                   const std::string& out, double p_tremble, bool force) {
  envs::env_spec(env);
  if (episodes < 0) throw ConfigError("episodes must be >= 0");
  if (p_tremble < 0.0 || p_tremble > 1.0) throw ConfigError("p-tremble outside [0, 1]");
  claim_output(out, force);
  if (fs::path(out).has_parent_path()) fs::create_directories(fs::path(out).parent_path());
  train::ExpertController expert(env);
  train::EvalResult result;
  const buffers::ReplayBuffer data =
      train::collect_episodes(env, expert, episodes, seed, p_tremble, &result);
  buffers::save(data, out);
  std::printf("wrote %d episodes to %s\n", episodes, out.c_str());
  if (episodes > 0) std::printf("expert return %.3f +- %.3f\n", result.mean, result.std);
  return kExitOk;
}

int cmd_train(const train::TrainConfig& config, const fs::path& run_dir, bool force, bool quiet) {
  claim_output(run_dir, force);
  train::TrainOptions opts;
  opts.run_dir = run_dir.string();
  if (!quiet) opts.on_row = print_row;
  const train::TrainResult r = train::train(config, opts);
  if (r.evaluated) {
    std::printf("final eval return %.3f +- %.3f\n", r.final_eval.mean, r.final_eval.std);
  }
  std::printf("run directory %s\n", run_dir.string().c_str());
  return kExitOk;
}

int cmd_eval(const fs::path& run_dir, std::int64_t step, int episodes, const std::string& mode,
             std::uint64_t seed, const std::string& out, bool force) {
  if (!fs::exists(run_dir / "config.cfg")) {
    throw FormatError("no config.cfg in run directory " + run_dir.string());
  }
  const train::TrainConfig config = train::load_config((run_dir / "config.cfg").string());
  std::string ckpt;
  if (step < 0) {
    ckpt = latest_checkpoint(run_dir, &step);
  } else {
    ckpt = (run_dir / ("ckpt_" + std::to_string(step))).string();
  }
  if (!out.empty()) claim_output(out, force);
  const envs::EnvSpec spec = envs::env_spec(config.env);
  train::Agent agent(config, spec.obs_dim, spec.action_dim);
  agent.load(ckpt);
  const train::EvalMode m = mode.empty() ? config.eval_mode : train::parse_eval_mode(mode);
  const int n = episodes > 0 ? episodes : config.eval_episodes;
  const train::EvalResult r = train::evaluate_agent(agent, n, m, seed);
  std::ostringstream text;
  text << "checkpoint " << ckpt << "\nmode " << train::to_string(m) << "\nepisodes " << n
       << "\nreturn_mean " << r.mean << "\nreturn_std " << r.std << "\nsuccess_rate "
       << r.success_rate << "\n";
  std::cout << text.str();
  if (!out.empty()) std::ofstream(out) << text.str();
  return kExitOk;
}

std::vector<std::vector<std::string>> read_grid(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot read grid file " + path);
  std::vector<std::vector<std::string>> grid;
  std::string line;
  while (std::getline(in, line)) {
    const auto hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    std::istringstream ss(line);
    std::vector<std::string> sets;
    std::string tok;
    while (ss >> tok) sets.push_back(tok);
    if (!sets.empty()) grid.push_back(std::move(sets));
  }
  return grid;
}

int cmd_sweep(const std::string& base, const std::vector<std::string>& base_sets,
              const std::string& grid_path, int jobs, const fs::path& out, bool force) {
  if (jobs < 1) throw ConfigError("--jobs must be >= 1");
  const auto grid = read_grid(grid_path);
  std::vector<train::TrainConfig> configs;
  for (const auto& sets : grid) {
    std::vector<std::string> all = base_sets;
    all.insert(all.end(), sets.begin(), sets.end());
    configs.push_back(build_config(base, all));
  }
  claim_output(out, force);
  fs::create_directories(out);
  // A single data check up front keeps every child from failing alike.
  for (const auto& c : configs) train::load_expert(c);

  std::vector<fs::path> dirs;
  for (std::size_t i = 0; i < configs.size(); ++i) dirs.push_back(out / ("run_" + std::to_string(i)));
  std::vector<int> codes(configs.size(), 0);
  std::map<pid_t, std::size_t> running;
  std::fflush(stdout);
  std::size_t next = 0;
  while (next < configs.size() || !running.empty()) {
    while (next < configs.size() && static_cast<int>(running.size()) < jobs) {
      const pid_t pid = fork();
      if (pid < 0) throw Error("fork failed");
      if (pid == 0) {
        int code = 1;
        try {
          train::TrainOptions opts;
          opts.run_dir = dirs[next].string();
          train::train(configs[next], opts);
          code = kExitOk;
        } catch (const std::exception& e) {
          std::fprintf(stderr, "run_%zu: %s\n", next, e.what());
          code = exit_code_for(e);
        }
        std::fflush(nullptr);
        _exit(code);
      }
      running[pid] = next++;
    }
    int status = 0;
    const pid_t done = wait(&status);
    if (done < 0) break;
    const std::size_t idx = running.at(done);
    running.erase(done);
    codes[idx] = WIFEXITED(status) ? WEXITSTATUS(status) : 1;
    std::printf("run_%zu finished (exit %d)\n", idx, codes[idx]);
    std::fflush(stdout);
  }

  std::ofstream summary(out / "summary.csv");
  summary << "run,config_hash,overrides,final_eval_mean,final_eval_std,exit_code\n";
  int worst = kExitOk;
  for (std::size_t i = 0; i < configs.size(); ++i) {
    double mean = train::kMissing;
    double sd = train::kMissing;
    if (codes[i] == 0) {
      const train::MetricsTable t = train::read_metrics((dirs[i] / "metrics.csv").string());
      if (!t.rows.empty()) {
        mean = t.rows.back()[1];
        sd = t.rows.back()[2];
      }
    } else {
      worst = codes[i];
    }
    std::string joined;
    for (const auto& s : grid[i]) joined += (joined.empty() ? "" : " ") + s;
    char hash[20];
    std::snprintf(hash, sizeof hash, "%016llx",
                  static_cast<unsigned long long>(config_group_hash(dirs[i].string())));
    summary << "run_" << i << ',' << hash << ",\"" << joined << "\"," << mean << ',' << sd << ','
            << codes[i] << '\n';
    std::printf("run_%zu  %-40s  %.3f +- %.3f\n", i, joined.c_str(), mean, sd);
  }
  return worst;
}

int cmd_export(const std::vector<std::string>& inputs, const fs::path& out, bool force) {
  std::vector<std::string> runs;
  for (const auto& in : inputs) {
    const fs::path p(in);
    if (fs::exists(p / "metrics.csv")) {
      runs.push_back(p.string());
      continue;
    }
    if (!fs::is_directory(p)) throw FormatError("no metrics.csv under " + in);
    std::vector<std::string> found;
    for (const auto& e : fs::directory_iterator(p)) {
      if (fs::exists(e.path() / "metrics.csv")) found.push_back(e.path().string());
    }
    if (found.empty()) throw FormatError("no metrics.csv under " + in);
    std::sort(found.begin(), found.end());
    runs.insert(runs.end(), found.begin(), found.end());
  }
  claim_output(out, force);
  const ExportStats s = export_plots(runs, out.string());
  std::printf("%zu runs, %zu long rows, %zu summary rows, %zu config groups\n", runs.size(),
              s.long_rows, s.summary_rows, s.config_hashes.size());
  return kExitOk;
}

}  // namespace

std::string run_root() {
  const char* env = std::getenv("CDRED_RUN_ROOT");
  return env != nullptr && *env != '\0' ? env : "runs";
}

std::string config_help() {
  const train::TrainConfig defaults;
  std::ostringstream out;
  out << "Config keys (key = default  range):\n";
  for (const auto& k : train::config_keys()) {
    std::string value = k.get(defaults);
    if (value.empty()) value = "\"\"";
    char line[256];
    std::snprintf(line, sizeof line, "  %-20s = %-14s %s  %s\n", k.name.c_str(), value.c_str(),
                  k.range.c_str(), k.help.c_str());
    out << line;
  }
  return out.str();
}

int run(int argc, char** argv) {
  CLI::App app{"CDRED online imitation learning"};
  app.require_subcommand(1);
  app.footer(config_help());

  std::string env = "point-mass-2d";
  int episodes = 100;
  std::uint64_t seed = 0;
  std::string out;
  double p_tremble = 0.0;
  bool force = false;
  auto* gen = app.add_subcommand("gen-expert", "Roll out the scripted expert into a .traj file");
  gen->add_option("--env", env, "environment")->capture_default_str();
  gen->add_option("--episodes", episodes, "episode count")->capture_default_str();
  gen->add_option("--seed", seed, "seed")->capture_default_str();
  gen->add_option("--out", out, "output .traj path")->required();
  gen->add_option("--p-tremble", p_tremble, "random action probability")->capture_default_str();
  gen->add_flag("--force", force, "overwrite an existing file");

  std::string config_path;
  std::vector<std::string> sets;
  std::string name;
  bool quiet = false;
  auto* tr = app.add_subcommand("train", "Train one run");
  tr->add_option("--config", config_path, "config file");
  tr->add_option("--set,overrides", sets, "key=value overrides");
  tr->add_option("--name", name, "run name under the run root");
  tr->add_option("--out", out, "run directory (overrides --name)");
  tr->add_flag("--force", force, "overwrite an existing run directory");
  tr->add_flag("--quiet", quiet, "no progress lines");
  tr->footer(config_help());

  std::string run_dir;
  std::int64_t step = -1;
  int eval_episodes = 0;
  std::string mode;
  auto* ev = app.add_subcommand("eval", "Evaluate a checkpoint");
  ev->add_option("--run", run_dir, "run directory")->required();
  ev->add_option("--step", step, "checkpoint step (default latest)");
  ev->add_option("--episodes", eval_episodes, "episodes (default from config)");
  ev->add_option("--mode", mode, "plan | policy");
  ev->add_option("--seed", seed, "evaluation seed")->capture_default_str();
  ev->add_option("--out", out, "write the result to this file");
  ev->add_flag("--force", force, "overwrite --out");

  std::string grid;
  int jobs = 1;
  auto* sw = app.add_subcommand("sweep", "Train one run per grid line");
  sw->add_option("--config", config_path, "base config file");
  sw->add_option("--set", sets, "overrides applied to every run");
  sw->add_option("--grid", grid, "grid file, one override set per line")->required();
  sw->add_option("--jobs", jobs, "parallel processes")->capture_default_str();
  sw->add_option("--out", out, "sweep directory");
  sw->add_flag("--force", force, "overwrite an existing sweep directory");
  sw->footer(config_help());

  std::vector<std::string> inputs;
  auto* ex = app.add_subcommand("export-plots", "Merge run metrics into plot-ready CSV");
  ex->add_option("runs", inputs, "run or sweep directories")->required();
  ex->add_option("--out", out, "output directory")->required();
  ex->add_flag("--force", force, "overwrite the output directory");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kExitOk : kExitConfig;
  }

  try {
    if (gen->parsed()) return cmd_gen_expert(env, episodes, seed, out, p_tremble, force);
    if (tr->parsed()) {
      const train::TrainConfig c = build_config(config_path, sets);
      fs::path dir = out;
      if (dir.empty()) {
        dir = fs::path(run_root()) / (name.empty() ? c.env + "_seed" + std::to_string(c.seed) : name);
      }
      return cmd_train(c, dir, force, quiet);
    }
    if (ev->parsed()) return cmd_eval(run_dir, step, eval_episodes, mode, seed, out, force);
    if (sw->parsed()) {
      const fs::path dir = out.empty() ? fs::path(run_root()) / "sweep" : fs::path(out);
      return cmd_sweep(config_path, sets, grid, jobs, dir, force);
    }
    if (ex->parsed()) return cmd_export(inputs, out, force);
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return exit_code_for(e);
  }
  return kExitOk;
}

}  // namespace cdred::cli
