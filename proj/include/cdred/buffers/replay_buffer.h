#pragma once

#include <cstdint>
#include <deque>
#include <limits>
#include <vector>

#include "cdred/common/types.h"

namespace cdred::buffers {

struct Transition {
  Vector obs;
  Vector action;
  double reward = 0.0;  // task reward: logged for evaluation, never trained on
  Vector next_obs;
  bool terminal = false;
  std::int64_t episode = 0;
  std::int64_t step = 0;
};

// One episode stored as flat single-precision arrays, row t at offset t*dim.
struct Episode {
  std::int64_t id = 0;
  std::vector<float> obs;
  std::vector<float> actions;
  std::vector<float> rewards;
  std::vector<float> next_obs;
  std::vector<float> terminal;
  bool closed = false;

  std::size_t length() const { return rewards.size(); }
};

enum class Source : std::uint8_t { kExpert = 0, kBehavioral = 1 };

// Episodic replay store. Transitions of one episode must arrive in order;
// a new episode id (or a terminal flag) closes the current episode. When
// the transition count exceeds capacity, whole episodes are evicted
// oldest-first.
class ReplayBuffer {
 public:
  static constexpr std::size_t kUnlimited = std::numeric_limits<std::size_t>::max();

  ReplayBuffer(int obs_dim, int action_dim, std::size_t capacity = kUnlimited);

  // Throws DimensionError on width mismatch, ContractError when the step
  // index does not continue the open episode.
  void add(const Transition& t);
  void add_episode(Episode episode);

  int obs_dim() const { return obs_dim_; }
  int action_dim() const { return action_dim_; }
  std::size_t capacity() const { return capacity_; }
  std::size_t size() const { return size_; }
  std::size_t episode_count() const { return episodes_.size(); }
  const std::deque<Episode>& episodes() const { return episodes_; }
  const Episode& episode(std::size_t i) const { return episodes_.at(i); }

  Transition transition(std::size_t episode_index, std::size_t t) const;

  // Number of start indices admitting a segment of horizon+1 rows.
  std::size_t valid_starts(int horizon) const;
  // Uniform over all valid start indices. Throws NotReadyError if none.
  std::pair<std::size_t, std::size_t> sample_start(int horizon, Rng& rng) const;

  // Drops all but the first n episodes.
  void truncate_episodes(std::size_t n);
  void close_episode();

 private:
  int obs_dim_;
  int action_dim_;
  std::size_t capacity_;
  std::size_t size_ = 0;
  std::deque<Episode> episodes_;
};

// Horizon-H segments stacked column-wise; each step t in [0, H] holds one
// matrix per field. Expert columns come first.
struct SegmentBatch {
  int horizon = 0;
  int expert_count = 0;
  std::vector<Matrix> obs;       // obs_dim x B
  std::vector<Matrix> actions;   // action_dim x B
  std::vector<Matrix> next_obs;  // obs_dim x B
  std::vector<Vector> rewards;
  std::vector<Vector> terminal;  // 1.0 on terminal rows
  std::vector<Source> source;    // per column
  // (episode index, start) per column, for diagnostics and tests.
  std::vector<std::pair<std::size_t, std::size_t>> origin;

  int batch_size() const { return static_cast<int>(source.size()); }
  int steps() const { return horizon + 1; }
  int behavioral_count() const { return batch_size() - expert_count; }
};

// Draws round(mix * batch) expert segments and the rest behavioral.
// Throws NotReadyError when a source that must contribute has no valid
// start index, ConfigError for mix outside [0, 1] or negative horizon.
SegmentBatch sample_segments(const ReplayBuffer& expert, const ReplayBuffer& behavioral,
                             int batch, int horizon, double mix, Rng& rng);

}  // namespace cdred::buffers
