#include "cdred/train/config.h"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

#include "cdred/common/error.h"
#include "cdred/envs/env.h"

namespace cdred::train {
namespace {

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r\n");
  if (b == std::string::npos) return "";
  const auto e = s.find_last_not_of(" \t\r\n");
  return s.substr(b, e - b + 1);
}

template <typename T>
T parse_integer(const std::string& key, const std::string& text) {
  T value{};
  const auto* end = text.data() + text.size();
  auto [ptr, ec] = std::from_chars(text.data(), end, value);
  if (ec != std::errc() || ptr != end) {
    throw ConfigError("key '" + key + "': expected an integer, got '" + text + "'");
  }
  return value;
}

double parse_real(const std::string& key, const std::string& text) {
  try {
    std::size_t used = 0;
    const double v = std::stod(text, &used);
    if (used != text.size()) throw std::invalid_argument("trailing");
    return v;
  } catch (const std::exception&) {
    throw ConfigError("key '" + key + "': expected a number, got '" + text + "'");
  }
}

bool parse_bool(const std::string& key, const std::string& text) {
  if (text == "true" || text == "1") return true;
  if (text == "false" || text == "0") return false;
  throw ConfigError("key '" + key + "': expected true or false, got '" + text + "'");
}

std::string format_real(double v) {
  char buf[32];
  auto res = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, res.ptr);
}

template <typename T>
ConfigKey integer_key(std::string name, T TrainConfig::*field, std::string range,
                      std::string help) {
  const std::string key = name;
  return {std::move(name), std::move(range), std::move(help),
          [field, key](TrainConfig& c, const std::string& v) {
            c.*field = parse_integer<T>(key, v);
          },
          [field](const TrainConfig& c) { return std::to_string(c.*field); }};
}

ConfigKey real_key(std::string name, double TrainConfig::*field, std::string range,
                   std::string help) {
  const std::string key = name;
  return {std::move(name), std::move(range), std::move(help),
          [field, key](TrainConfig& c, const std::string& v) { c.*field = parse_real(key, v); },
          [field](const TrainConfig& c) { return format_real(c.*field); }};
}

std::vector<ConfigKey> build_keys() {
  using C = TrainConfig;
  std::vector<ConfigKey> keys;
  keys.push_back({"env", "point-mass-2d | pendulum-swingup", "environment name",
                  [](C& c, const std::string& v) { c.env = v; },
                  [](const C& c) { return c.env; }});
  keys.push_back(integer_key("seed", &C::seed, "[0, 2^64)", "master seed"));
  keys.push_back(integer_key("total_steps", &C::total_steps, "[0, 1e9]", "environment steps"));
  keys.push_back(integer_key("updates_per_step", &C::updates_per_step, "[0, 64]",
                             "gradient updates per environment step"));
  keys.push_back(integer_key("batch_size", &C::batch_size, "[1, 65536]", "segments per update"));
  keys.push_back(integer_key("horizon", &C::horizon, "[1, 64]", "unroll horizon H"));
  keys.push_back(real_key("lambda", &C::lambda, "(0, 1]", "horizon discount"));
  keys.push_back(real_key("gamma", &C::gamma, "[0, 1]", "environment discount"));
  keys.push_back(real_key("beta", &C::beta, "[0, 10]", "policy entropy coefficient"));
  keys.push_back(real_key("zeta", &C::zeta, "(0, 1]", "expert/behavioral reward mix"));
  keys.push_back(real_key("sigma", &C::sigma, "(0, 1e3]", "reward decay rate"));
  keys.push_back(real_key("alpha", &C::alpha, "[0, 1]", "bonus blend of distance and correction"));
  keys.push_back(integer_key("ensemble", &C::ensemble, "[1, 64]", "random target count K"));
  keys.push_back(integer_key("embed_dim", &C::embed_dim, "[1, 4096]", "target embedding width p"));
  keys.push_back({"g", "linear | exp", "reward shaping function",
                  [](C& c, const std::string& v) { c.g = reward::parse_g(v); },
                  [](const C& c) { return reward::to_string(c.g); }});
  keys.push_back({"mode", "cdred | red-baseline", "reward model",
                  [](C& c, const std::string& v) { c.mode = reward::parse_mode(v); },
                  [](const C& c) { return reward::to_string(c.mode); }});
  keys.push_back({"expert_path", "path", "expert trajectory file",
                  [](C& c, const std::string& v) { c.expert_path = v; },
                  [](const C& c) { return c.expert_path; }});
  keys.push_back(integer_key("expert_episodes", &C::expert_episodes, "[1, 1e6]",
                             "expert episodes loaded from the file"));
  keys.push_back(integer_key("eval_interval", &C::eval_interval, "[0, 1e9]",
                             "steps between evaluations, 0 = final only"));
  keys.push_back(integer_key("eval_episodes", &C::eval_episodes, "[1, 10000]",
                             "episodes per evaluation"));
  keys.push_back({"eval_mode", "plan | policy", "evaluation controller",
                  [](C& c, const std::string& v) { c.eval_mode = parse_eval_mode(v); },
                  [](const C& c) { return to_string(c.eval_mode); }});
  keys.push_back(real_key("p_tremble", &C::p_tremble, "[0, 1]", "random action probability"));
  keys.push_back(integer_key("scheduler_step", &C::scheduler_step, "[1, 1e12]",
                             "updates between learning-rate decays"));
  keys.push_back(integer_key("seed_steps", &C::seed_steps, "[0, 1e9]",
                             "uniform random warmup steps"));
  keys.push_back(real_key("lr", &C::lr, "(0, 1]", "base learning rate"));
  keys.push_back(real_key("lr_gamma", &C::lr_gamma, "(0, 1]", "learning-rate decay factor"));
  keys.push_back(real_key("tau", &C::tau, "[0, 1]", "target soft-update coefficient"));
  keys.push_back(real_key("expert_mix", &C::expert_mix, "[0, 1]",
                          "expert share of each batch"));
  keys.push_back(real_key("grad_clip", &C::grad_clip, "[0, 1e9]",
                          "gradient norm clip, 0 = off"));
  keys.push_back(integer_key("buffer_capacity", &C::buffer_capacity, "[1, 1e9]",
                             "behavioral buffer transitions"));
  keys.push_back(integer_key("log_interval", &C::log_interval, "[1, 1e9]",
                             "steps per metrics window"));
  keys.push_back(integer_key("checkpoint_interval", &C::checkpoint_interval, "[0, 1e9]",
                             "steps between checkpoints, 0 = evaluations only"));
  keys.push_back(integer_key("latent_dim", &C::latent_dim, "[8, 65536], multiple of simnorm_group",
                             "latent width"));
  keys.push_back(integer_key("enc_dim", &C::enc_dim, "[1, 65536]", "encoder hidden width"));
  keys.push_back(integer_key("mlp_dim", &C::mlp_dim, "[1, 65536]", "dynamics/Q/policy hidden width"));
  keys.push_back(integer_key("cdred_hidden", &C::cdred_hidden, "[1, 65536]",
                             "predictor/target hidden width"));
  keys.push_back(integer_key("num_q", &C::num_q, "[1, 32]", "Q heads"));
  keys.push_back(integer_key("num_bins", &C::num_bins, "[2, 1001]", "value bins"));
  keys.push_back(integer_key("simnorm_group", &C::simnorm_group, "[1, 256]", "SimNorm group size"));
  keys.push_back(integer_key("plan_samples", &C::plan_samples, "[0, 1e6]",
                             "Gaussian candidates per iteration"));
  keys.push_back(integer_key("plan_policy_samples", &C::plan_policy_samples, "[0, 1e6]",
                             "policy-prior candidates"));
  keys.push_back(integer_key("plan_iterations", &C::plan_iterations, "[1, 100]", "MPPI iterations"));
  keys.push_back(integer_key("plan_elites", &C::plan_elites, "[1, 1e6]", "elite count"));
  keys.push_back(real_key("plan_temperature", &C::plan_temperature, "(0, 1e6]",
                          "elite weighting temperature"));
  keys.push_back(real_key("plan_min_std", &C::plan_min_std, "[0, plan_max_std]", "std floor"));
  keys.push_back(real_key("plan_max_std", &C::plan_max_std, "[plan_min_std, 1e3]",
                          "initial std"));
  keys.push_back({"plan_telemetry", "true | false", "log planner elite statistics",
                  [](C& c, const std::string& v) { c.plan_telemetry = parse_bool("plan_telemetry", v); },
                  [](const C& c) { return std::string(c.plan_telemetry ? "true" : "false"); }});
  return keys;
}

void check(bool ok, const char* key, const std::string& range) {
  if (!ok) throw ConfigError(std::string("key '") + key + "' outside range " + range);
}

}  // namespace

const std::vector<ConfigKey>& config_keys() {
  static const std::vector<ConfigKey> keys = build_keys();
  return keys;
}

bool is_config_key(const std::string& name) {
  const auto& keys = config_keys();
  return std::any_of(keys.begin(), keys.end(), [&](const ConfigKey& k) { return k.name == name; });
}

void TrainConfig::validate() const {
  const auto envs = envs::registered_envs();
  if (std::find(envs.begin(), envs.end(), env) == envs.end()) {
    throw ConfigError("key 'env': unknown environment '" + env + "'");
  }
  check(total_steps >= 0 && total_steps <= 1000000000, "total_steps", "[0, 1e9]");
  check(updates_per_step >= 0 && updates_per_step <= 64, "updates_per_step", "[0, 64]");
  check(batch_size >= 1 && batch_size <= 65536, "batch_size", "[1, 65536]");
  check(horizon >= 1 && horizon <= 64, "horizon", "[1, 64]");
  check(lambda > 0.0 && lambda <= 1.0, "lambda", "(0, 1]");
  check(gamma >= 0.0 && gamma <= 1.0, "gamma", "[0, 1]");
  check(beta >= 0.0 && beta <= 10.0, "beta", "[0, 10]");
  check(zeta > 0.0 && zeta <= 1.0, "zeta", "(0, 1]");
  check(sigma > 0.0 && sigma <= 1e3, "sigma", "(0, 1e3]");
  check(alpha >= 0.0 && alpha <= 1.0, "alpha", "[0, 1]");
  check(ensemble >= 1 && ensemble <= 64, "ensemble", "[1, 64]");
  check(embed_dim >= 1 && embed_dim <= 4096, "embed_dim", "[1, 4096]");
  check(expert_episodes >= 1 && expert_episodes <= 1000000, "expert_episodes", "[1, 1e6]");
  check(eval_interval >= 0 && eval_interval <= 1000000000, "eval_interval", "[0, 1e9]");
  check(eval_episodes >= 1 && eval_episodes <= 10000, "eval_episodes", "[1, 10000]");
  check(p_tremble >= 0.0 && p_tremble <= 1.0, "p_tremble", "[0, 1]");
  check(scheduler_step >= 1, "scheduler_step", "[1, 1e12]");
  check(seed_steps >= 0 && seed_steps <= 1000000000, "seed_steps", "[0, 1e9]");
  check(lr > 0.0 && lr <= 1.0, "lr", "(0, 1]");
  check(lr_gamma > 0.0 && lr_gamma <= 1.0, "lr_gamma", "(0, 1]");
  check(tau >= 0.0 && tau <= 1.0, "tau", "[0, 1]");
  check(expert_mix >= 0.0 && expert_mix <= 1.0, "expert_mix", "[0, 1]");
  check(grad_clip >= 0.0, "grad_clip", "[0, 1e9]");
  check(buffer_capacity >= 1, "buffer_capacity", "[1, 1e9]");
  check(log_interval >= 1, "log_interval", "[1, 1e9]");
  check(checkpoint_interval >= 0, "checkpoint_interval", "[0, 1e9]");
  check(simnorm_group >= 1 && simnorm_group <= 256, "simnorm_group", "[1, 256]");
  check(latent_dim >= 8 && latent_dim <= 65536 && latent_dim % simnorm_group == 0, "latent_dim",
        "[8, 65536], multiple of simnorm_group");
  check(enc_dim >= 1 && enc_dim <= 65536, "enc_dim", "[1, 65536]");
  check(mlp_dim >= 1 && mlp_dim <= 65536, "mlp_dim", "[1, 65536]");
  check(cdred_hidden >= 1 && cdred_hidden <= 65536, "cdred_hidden", "[1, 65536]");
  check(num_q >= 1 && num_q <= 32, "num_q", "[1, 32]");
  check(num_bins >= 2 && num_bins <= 1001, "num_bins", "[2, 1001]");
  check(plan_samples >= 0 && plan_policy_samples >= 0 && plan_samples + plan_policy_samples >= 1,
        "plan_samples", "[0, 1e6] with at least one candidate");
  check(plan_iterations >= 1 && plan_iterations <= 100, "plan_iterations", "[1, 100]");
  check(plan_elites >= 1, "plan_elites", "[1, 1e6]");
  check(plan_temperature > 0.0, "plan_temperature", "(0, 1e6]");
  check(plan_min_std >= 0.0 && plan_min_std <= plan_max_std, "plan_min_std", "[0, plan_max_std]");
  check(plan_max_std <= 1e3, "plan_max_std", "[plan_min_std, 1e3]");
}

world::WorldModelConfig TrainConfig::world_config(int obs_dim, int action_dim) const {
  world::WorldModelConfig w;
  w.obs_dim = obs_dim;
  w.action_dim = action_dim;
  w.latent_dim = latent_dim;
  w.enc_dim = enc_dim;
  w.mlp_dim = mlp_dim;
  w.num_q = num_q;
  w.num_bins = num_bins;
  w.simnorm_group = simnorm_group;
  w.seed = mix_seed(seed, 100);
  return w;
}

reward::CdredConfig TrainConfig::cdred_config(int action_dim) const {
  reward::CdredConfig r;
  r.latent_dim = latent_dim;
  r.action_dim = action_dim;
  r.hidden_dim = cdred_hidden;
  r.embed_dim = embed_dim;
  r.ensemble = ensemble;
  r.zeta = zeta;
  r.sigma = sigma;
  r.alpha = alpha;
  r.g = g;
  r.mode = mode;
  r.seed = mix_seed(seed, 200);
  return r;
}

world::LossConfig TrainConfig::loss_config() const { return {lambda, gamma, beta}; }

planner::PlannerConfig TrainConfig::planner_config() const {
  planner::PlannerConfig p;
  p.horizon = horizon;
  p.samples = plan_samples;
  p.policy_samples = plan_policy_samples;
  p.iterations = plan_iterations;
  p.elites = plan_elites;
  p.temperature = plan_temperature;
  p.min_std = plan_min_std;
  p.max_std = plan_max_std;
  p.gamma = gamma;
  return p;
}

std::uint64_t TrainConfig::hash() const {
  std::uint64_t h = 1469598103934665603ULL;
  for (char ch : format_config(*this)) {
    h ^= static_cast<unsigned char>(ch);
    h *= 1099511628211ULL;
  }
  return h;
}

void apply_override(TrainConfig& config, const std::string& assignment) {
  const auto eq = assignment.find('=');
  if (eq == std::string::npos) {
    throw ConfigError("override '" + assignment + "' is not key=value");
  }
  const std::string key = trim(assignment.substr(0, eq));
  const std::string value = trim(assignment.substr(eq + 1));
  for (const auto& k : config_keys()) {
    if (k.name == key) {
      k.set(config, value);
      return;
    }
  }
  throw ConfigError("unknown config key '" + key + "'");
}

void apply_overrides(TrainConfig& config, const std::vector<std::string>& assignments) {
  // Reject unknown keys before touching anything.
  for (const auto& a : assignments) {
    const auto eq = a.find('=');
    if (eq == std::string::npos) throw ConfigError("override '" + a + "' is not key=value");
    const std::string key = trim(a.substr(0, eq));
    if (!is_config_key(key)) throw ConfigError("unknown config key '" + key + "'");
  }
  for (const auto& a : assignments) apply_override(config, a);
}

TrainConfig parse_config(const std::string& text) {
  TrainConfig config;
  std::istringstream in(text);
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    const auto hash_pos = line.find('#');
    if (hash_pos != std::string::npos) line.erase(hash_pos);
    line = trim(line);
    if (line.empty()) continue;
    if (line.find('=') == std::string::npos) {
      throw ConfigError("config line " + std::to_string(lineno) + ": expected key = value");
    }
    apply_override(config, line);
  }
  return config;
}

TrainConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot read config file " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return parse_config(ss.str());
}

std::string format_config(const TrainConfig& config) {
  std::string out;
  for (const auto& k : config_keys()) out += k.name + " = " + k.get(config) + "\n";
  return out;
}

void save_config(const TrainConfig& config, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw ConfigError("cannot write config file " + path);
  out << format_config(config);
}

std::string to_string(EvalMode mode) { return mode == EvalMode::kPlan ? "plan" : "policy"; }

EvalMode parse_eval_mode(const std::string& text) {
  if (text == "plan") return EvalMode::kPlan;
  if (text == "policy" || text == "policy-only") return EvalMode::kPolicy;
  throw ConfigError("unknown eval mode '" + text + "'");
}

}  // namespace cdred::train
