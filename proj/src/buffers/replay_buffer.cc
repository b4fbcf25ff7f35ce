#include "cdred/buffers/replay_buffer.h"

#include <algorithm>
#include <cmath>
#include <string>

#include "cdred/common/error.h"

namespace cdred::buffers {
namespace {

void append(std::vector<float>& dst, const Vector& v) {
  for (Eigen::Index i = 0; i < v.size(); ++i) dst.push_back(static_cast<float>(v[i]));
}

Vector row(const std::vector<float>& src, std::size_t t, int dim) {
  Vector v(dim);
  for (int i = 0; i < dim; ++i) v[i] = src[t * static_cast<std::size_t>(dim) + i];
  return v;
}

}  // namespace

ReplayBuffer::ReplayBuffer(int obs_dim, int action_dim, std::size_t capacity)
    : obs_dim_(obs_dim), action_dim_(action_dim), capacity_(capacity) {
  if (obs_dim <= 0 || action_dim <= 0) {
    throw DimensionError("replay buffer: widths must be positive");
  }
}

void ReplayBuffer::add(const Transition& t) {
  if (t.obs.size() != obs_dim_ || t.next_obs.size() != obs_dim_ ||
      t.action.size() != action_dim_) {
    throw DimensionError("replay buffer: transition widths do not match (obs " +
                         std::to_string(obs_dim_) + ", action " +
                         std::to_string(action_dim_) + ")");
  }
  if (episodes_.empty() || episodes_.back().closed || episodes_.back().id != t.episode) {
    close_episode();
    Episode e;
    e.id = t.episode;
    episodes_.push_back(std::move(e));
  }
  Episode& e = episodes_.back();
  if (t.step != static_cast<std::int64_t>(e.length())) {
    throw ContractError("replay buffer: step " + std::to_string(t.step) +
                        " does not continue episode " + std::to_string(t.episode));
  }
  append(e.obs, t.obs);
  append(e.actions, t.action);
  e.rewards.push_back(static_cast<float>(t.reward));
  append(e.next_obs, t.next_obs);
  e.terminal.push_back(t.terminal ? 1.0f : 0.0f);
  if (t.terminal) e.closed = true;
  ++size_;

  while (size_ > capacity_ && episodes_.size() > 1) {
    size_ -= episodes_.front().length();
    episodes_.pop_front();
  }
}

void ReplayBuffer::add_episode(Episode episode) {
  const std::size_t n = episode.length();
  if (episode.obs.size() != n * obs_dim_ || episode.next_obs.size() != n * obs_dim_ ||
      episode.actions.size() != n * action_dim_ || episode.terminal.size() != n) {
    throw DimensionError("replay buffer: episode arrays have inconsistent widths");
  }
  close_episode();
  episode.closed = true;
  size_ += n;
  episodes_.push_back(std::move(episode));
  while (size_ > capacity_ && episodes_.size() > 1) {
    size_ -= episodes_.front().length();
    episodes_.pop_front();
  }
}

void ReplayBuffer::close_episode() {
  if (!episodes_.empty()) episodes_.back().closed = true;
}

Transition ReplayBuffer::transition(std::size_t episode_index, std::size_t t) const {
  const Episode& e = episodes_.at(episode_index);
  if (t >= e.length()) throw DimensionError("replay buffer: step out of range");
  Transition out;
  out.obs = row(e.obs, t, obs_dim_);
  out.action = row(e.actions, t, action_dim_);
  out.reward = e.rewards[t];
  out.next_obs = row(e.next_obs, t, obs_dim_);
  out.terminal = e.terminal[t] != 0.0f;
  out.episode = e.id;
  out.step = static_cast<std::int64_t>(t);
  return out;
}

std::size_t ReplayBuffer::valid_starts(int horizon) const {
  std::size_t n = 0;
  const auto need = static_cast<std::size_t>(horizon) + 1;
  for (const auto& e : episodes_) {
    if (e.length() >= need) n += e.length() - need + 1;
  }
  return n;
}

std::pair<std::size_t, std::size_t> ReplayBuffer::sample_start(int horizon,
                                                               Rng& rng) const {
  const std::size_t total = valid_starts(horizon);
  if (total == 0) {
    throw NotReadyError("replay buffer: no episode of length >= " +
                        std::to_string(horizon + 1));
  }
  std::uniform_int_distribution<std::size_t> pick(0, total - 1);
  std::size_t r = pick(rng);
  const auto need = static_cast<std::size_t>(horizon) + 1;
  for (std::size_t i = 0; i < episodes_.size(); ++i) {
    const std::size_t len = episodes_[i].length();
    if (len < need) continue;
    const std::size_t count = len - need + 1;
    if (r < count) return {i, r};
    r -= count;
  }
  throw ContractError("replay buffer: sampling walked past the last episode");
}

void ReplayBuffer::truncate_episodes(std::size_t n) {
  while (episodes_.size() > n) {
    size_ -= episodes_.back().length();
    episodes_.pop_back();
  }
}

SegmentBatch sample_segments(const ReplayBuffer& expert, const ReplayBuffer& behavioral,
                             int batch, int horizon, double mix, Rng& rng) {
  if (horizon < 0) throw ConfigError("sample_segments: horizon must be >= 0");
  if (!(mix >= 0.0 && mix <= 1.0)) throw ConfigError("sample_segments: mix must lie in [0, 1]");
  if (batch < 0) throw ConfigError("sample_segments: batch must be >= 0");
  if (expert.obs_dim() != behavioral.obs_dim() ||
      expert.action_dim() != behavioral.action_dim()) {
    throw DimensionError("sample_segments: buffers disagree on widths");
  }
  const int n_expert = static_cast<int>(std::lround(mix * batch));
  const int n_behavioral = batch - n_expert;
  if (n_expert > 0 && expert.valid_starts(horizon) == 0) {
    throw NotReadyError("sample_segments: expert buffer has no segment of horizon " +
                        std::to_string(horizon));
  }
  if (n_behavioral > 0 && behavioral.valid_starts(horizon) == 0) {
    throw NotReadyError("sample_segments: behavioral buffer has no segment of horizon " +
                        std::to_string(horizon));
  }

  const int obs_dim = expert.obs_dim();
  const int act_dim = expert.action_dim();
  const int steps = horizon + 1;
  SegmentBatch out;
  out.horizon = horizon;
  out.expert_count = n_expert;
  for (int t = 0; t < steps; ++t) {
    out.obs.emplace_back(obs_dim, batch);
    out.actions.emplace_back(act_dim, batch);
    out.next_obs.emplace_back(obs_dim, batch);
    out.rewards.emplace_back(batch);
    out.terminal.emplace_back(batch);
  }

  auto fill = [&](const ReplayBuffer& buf, int col, Source src) {
    const auto [ei, start] = buf.sample_start(horizon, rng);
    const Episode& e = buf.episode(ei);
    for (int t = 0; t < steps; ++t) {
      const std::size_t row_t = start + static_cast<std::size_t>(t);
      for (int i = 0; i < obs_dim; ++i) {
        out.obs[t](i, col) = e.obs[row_t * obs_dim + i];
        out.next_obs[t](i, col) = e.next_obs[row_t * obs_dim + i];
      }
      for (int i = 0; i < act_dim; ++i) out.actions[t](i, col) = e.actions[row_t * act_dim + i];
      out.rewards[t][col] = e.rewards[row_t];
      out.terminal[t][col] = e.terminal[row_t];
    }
    out.source.push_back(src);
    out.origin.emplace_back(ei, start);
  };
  for (int c = 0; c < n_expert; ++c) fill(expert, c, Source::kExpert);
  for (int c = n_expert; c < batch; ++c) fill(behavioral, c, Source::kBehavioral);
  return out;
}

}  // namespace cdred::buffers
