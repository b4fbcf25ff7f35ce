#include <doctest.h>

#include <sys/wait.h>

#include <array>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <limits>
#include <set>
#include <sstream>

#include "cdred/buffers/traj_io.h"
#include "cdred/train/config.h"
#include "cdred/train/evaluate.h"
#include "cdred/train/metrics.h"

using namespace cdred;
namespace fs = std::filesystem;

namespace {

struct Output {
  int code = -1;
  std::string text;
};

// Runs the command-line tool with stderr folded into the captured text.
Output cdred_cli(const std::string& args) {
  const std::string cmd = std::string(CDRED_BIN) + " " + args + " 2>&1";
  Output out;
  FILE* pipe = popen(cmd.c_str(), "r");
  REQUIRE(pipe != nullptr);
  std::array<char, 4096> buf{};
  std::size_t n = 0;
  while ((n = std::fread(buf.data(), 1, buf.size(), pipe)) > 0) out.text.append(buf.data(), n);
  const int status = pclose(pipe);
  out.code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
  return out;
}

fs::path work_dir() {
  static const fs::path dir = [] {
    const fs::path d = fs::temp_directory_path() / "cdred_cli_test";
    fs::remove_all(d);
    fs::create_directories(d);
    return d;
  }();
  return dir;
}

std::string tiny_overrides(const fs::path& expert) {
  return "--set env=point-mass-2d expert_path=" + expert.string() +
         " expert_episodes=2 total_steps=200 seed_steps=100 batch_size=8 latent_dim=16"
         " enc_dim=16 mlp_dim=16 cdred_hidden=16 embed_dim=8 num_q=2 num_bins=21"
         " plan_samples=16 plan_policy_samples=4 plan_iterations=2 plan_elites=4"
         " eval_interval=200 eval_episodes=10 log_interval=100";
}

const fs::path& expert_file() {
  static const fs::path p = [] {
    const fs::path f = work_dir() / "expert2.traj";
    REQUIRE(cdred_cli("gen-expert --episodes 2 --seed 5 --out " + f.string()).code == 0);
    return f;
  }();
  return p;
}

std::size_t count_lines(const fs::path& p) {
  std::ifstream in(p);
  std::size_t n = 0;
  std::string line;
  while (std::getline(in, line)) ++n;
  return n;
}

double field(const std::string& text, const std::string& key) {
  std::istringstream in(text);
  std::string k;
  double v = 0.0;
  std::string line;
  while (std::getline(in, line)) {
    std::istringstream ls(line);
    if (ls >> k >> v && k == key) return v;
  }
  FAIL("missing field " << key);
  return 0.0;
}

}  // namespace

TEST_CASE("help enumerates every config key with default and range") {
  const Output o = cdred_cli("--help");
  CHECK(o.code == 0);
  const train::TrainConfig defaults;
  for (const auto& k : train::config_keys()) {
    CAPTURE(k.name);
    CHECK(o.text.find("  " + k.name + " ") != std::string::npos);
    CHECK(o.text.find(k.range) != std::string::npos);
  }
  CHECK(cdred_cli("train --help").text.find("scheduler_step") != std::string::npos);
}

TEST_CASE("gen-expert writes the requested episodes") {
  const fs::path empty = work_dir() / "empty.traj";
  const Output o = cdred_cli("gen-expert --episodes 0 --out " + empty.string());
  CHECK(o.code == 0);
  CHECK(buffers::load(empty.string(), 4, 2).size() == 0);

  const fs::path full = work_dir() / "hundred.traj";
  const Output f = cdred_cli("gen-expert --env point-mass-2d --episodes 100 --seed 0 --out " + full.string());
  REQUIRE(f.code == 0);
  const buffers::TrajHeader h = buffers::read_header(full.string());
  CHECK(h.episode_count == 100);
  const buffers::ReplayBuffer b = buffers::load(full.string());
  for (const auto& e : b.episodes()) CHECK(e.length() == 200);
  double total = 0.0;
  for (const auto& e : b.episodes()) {
    for (float r : e.rewards) total += r;
  }
  const double baseline =
      train::read_baseline(std::string(CDRED_DATA_DIR) + "/expert_baselines.txt", "point-mass-2d");
  CHECK(std::abs(total / 100.0 - baseline) <= 0.02 * baseline);
  CHECK(f.text.find("expert return") != std::string::npos);

  CHECK(cdred_cli("gen-expert --episodes 1 --out " + full.string()).code == 2);
  CHECK(buffers::read_header(full.string()).episode_count == 100);
  CHECK(cdred_cli("gen-expert --episodes 1 --force --out " + full.string()).code == 0);
  CHECK(cdred_cli("gen-expert --env cartpole --out " + (work_dir() / "x.traj").string()).code == 2);
}

TEST_CASE("exit codes for config and data errors") {
  CHECK(cdred_cli("train --out " + (work_dir() / "bad1").string() + " --set bogus_key=1").code == 2);
  CHECK(!fs::exists(work_dir() / "bad1"));
  CHECK(cdred_cli("train --out " + (work_dir() / "bad2").string() + " --set zeta=7").code == 2);
  CHECK(cdred_cli("train --out " + (work_dir() / "bad3").string() +
                  " --set expert_path=" + (work_dir() / "none.traj").string()).code == 3);
  CHECK(cdred_cli("eval --run " + (work_dir() / "nothing").string()).code == 3);
  CHECK(cdred_cli("no-such-command").code != 0);

  buffers::ReplayBuffer clean = buffers::load(expert_file().string());
  buffers::Episode e = clean.episode(0);
  e.obs[1] = std::numeric_limits<float>::quiet_NaN();
  buffers::ReplayBuffer poisoned(4, 2);
  poisoned.add_episode(e);
  poisoned.add_episode(clean.episode(1));
  const fs::path bad = work_dir() / "poisoned.traj";
  buffers::save(poisoned, bad.string());
  const fs::path run = work_dir() / "nan_run";
  CHECK(cdred_cli("train --quiet --out " + run.string() + " " + tiny_overrides(bad) + " expert_mix=1").code == 4);
  CHECK(fs::exists(run / "diagnostics.txt"));
}

TEST_CASE("train, eval and overwrite refusal") {
  const fs::path run = work_dir() / "run_a";
  const Output t = cdred_cli("train --quiet --out " + run.string() + " " + tiny_overrides(expert_file()));
  REQUIRE(t.code == 0);
  CHECK(fs::exists(run / "ckpt_0"));
  CHECK(fs::exists(run / "ckpt_200"));
  CHECK(fs::exists(run / "config.cfg"));
  const train::MetricsTable m = train::read_metrics((run / "metrics.csv").string());
  REQUIRE(!m.rows.empty());
  const double logged_mean = m.rows.back()[1];
  const double logged_std = m.rows.back()[2];

  const Output e = cdred_cli("eval --run " + run.string() + " --step 200 --episodes 10");
  REQUIRE(e.code == 0);
  CHECK(std::abs(field(e.text, "return_mean") - logged_mean) <= logged_std + 1e-9);
  CHECK(cdred_cli("eval --run " + run.string() + " --mode policy --episodes 2").code == 0);

  CHECK(cdred_cli("train --quiet --out " + run.string() + " " + tiny_overrides(expert_file())).code == 2);
  CHECK(fs::exists(run / "ckpt_200"));

  const fs::path red = work_dir() / "run_red";
  CHECK(cdred_cli("train --quiet --out " + red.string() + " " + tiny_overrides(expert_file()) +
                  " mode=red-baseline zeta=1").code == 0);
  CHECK(train::load_config((red / "config.cfg").string()).mode == reward::RewardMode::kRedBaseline);
}

TEST_CASE("run root environment variable") {
  const fs::path root = work_dir() / "root";
  const std::string cmd = "env CDRED_RUN_ROOT=" + root.string() + " " + std::string(CDRED_BIN) +
                          " train --quiet --name named " + tiny_overrides(expert_file()) +
                          " total_steps=0 > /dev/null 2>&1";
  CHECK(std::system(cmd.c_str()) == 0);
  CHECK(fs::exists(root / "named" / "ckpt_0"));
}

TEST_CASE("sweep and export") {
  const fs::path grid = work_dir() / "zeta.grid";
  std::ofstream(grid) << "zeta=0.5\nzeta=0.8\n# comment line\nzeta=0.95\n";
  const fs::path sweep = work_dir() / "sweep";
  const Output s = cdred_cli("sweep --jobs 2 --grid " + grid.string() + " --out " + sweep.string() +
                             " " + tiny_overrides(expert_file()));
  REQUIRE(s.code == 0);
  for (int i = 0; i < 3; ++i) CHECK(fs::exists(sweep / ("run_" + std::to_string(i)) / "metrics.csv"));
  CHECK(count_lines(sweep / "summary.csv") == 4);

  const fs::path one = work_dir() / "export_one";
  REQUIRE(cdred_cli("export-plots " + (sweep / "run_0").string() + " --out " + one.string()).code == 0);
  const train::MetricsTable m = train::read_metrics((sweep / "run_0" / "metrics.csv").string());
  CHECK(count_lines(one / "metrics_long.csv") - 1 == m.rows.size() * (m.columns.size() - 1));

  // Three seeds of one config and the three zeta runs.
  const fs::path seeds = work_dir() / "seeds";
  std::ofstream(work_dir() / "seed.grid") << "seed=1\nseed=2\nseed=3\n";
  REQUIRE(cdred_cli("sweep --grid " + (work_dir() / "seed.grid").string() + " --out " + seeds.string() +
                    " " + tiny_overrides(expert_file()) + " total_steps=100 seed_steps=100").code == 0);
  const fs::path grouped = work_dir() / "export_seeds";
  REQUIRE(cdred_cli("export-plots " + seeds.string() + " --out " + grouped.string()).code == 0);
  std::ifstream in(grouped / "metrics_summary.csv");
  std::string line;
  std::getline(in, line);
  std::set<std::string> hashes;
  while (std::getline(in, line)) {
    std::vector<std::string> cols;
    std::stringstream ss(line);
    std::string c;
    while (std::getline(ss, c, ',')) cols.push_back(c);
    REQUIRE(cols.size() == 6);
    hashes.insert(cols[0]);
    if (cols[4] != "nan") CHECK(std::stod(cols[4]) >= 0.0);
  }
  CHECK(hashes.size() == 1);

  const fs::path mixed = work_dir() / "export_mixed";
  REQUIRE(cdred_cli("export-plots " + (sweep / "run_0").string() + " " + (sweep / "run_1").string() +
                    " --out " + mixed.string()).code == 0);
  std::ifstream in2(mixed / "metrics_summary.csv");
  std::getline(in2, line);
  hashes.clear();
  while (std::getline(in2, line)) hashes.insert(line.substr(0, line.find(',')));
  CHECK(hashes.size() == 2);
  CHECK(cdred_cli("export-plots " + seeds.string() + " --out " + mixed.string()).code == 2);
}
