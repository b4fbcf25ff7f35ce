#pragma once

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "cdred/buffers/replay_buffer.h"
#include "cdred/train/config.h"
#include "cdred/train/evaluate.h"
#include "cdred/train/metrics.h"

namespace cdred::train {

struct TrainOptions {
  // Empty: nothing is written to disk.
  std::string run_dir;
  // Overrides expert_path when set.
  const buffers::ReplayBuffer* expert = nullptr;
  // Called after every metrics row (progress display).
  std::function<void(const MetricsRow&)> on_row;
  // Zeroes the logged task reward of every behavioral transition.
  bool zero_task_reward = false;
};

struct TrainResult {
  std::int64_t steps = 0;
  std::vector<MetricsRow> rows;
  EvalResult final_eval;
  bool evaluated = false;
  std::vector<std::string> checkpoints;
};

// Loads and truncates the expert dataset named by the config. Throws
// FormatError when the file is missing, has the wrong widths or holds
// fewer episodes than requested.
buffers::ReplayBuffer load_expert(const TrainConfig& config);

// Online imitation loop. Writes config.cfg, metrics.csv and ckpt_<step>
// files under run_dir when one is given. On a non-finite loss the
// current state is checkpointed, diagnostics.txt is written and the
// NumericalError is rethrown.
TrainResult train(const TrainConfig& config, const TrainOptions& options = {});

}  // namespace cdred::train
