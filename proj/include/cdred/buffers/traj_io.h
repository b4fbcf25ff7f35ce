#pragma once

#include <string>

#include "cdred/buffers/replay_buffer.h"

namespace cdred::buffers {

// .traj dataset layout, little-endian:
//   magic "CDTRAJ\0\0" | u32 version | u32 obs_dim | u32 action_dim
//   u64 episode_count
//   per episode: u64 length | i64 episode id
//                f32 obs[length*obs_dim] | f32 actions[length*action_dim]
//                f32 rewards[length] | f32 next_obs[length*obs_dim]
//                f32 terminal[length]
inline constexpr std::uint32_t kTrajVersion = 1;

void save(const ReplayBuffer& buffer, const std::string& path);

// Throws FormatError on bad magic, version, truncation, or (when the
// expected widths are positive) a width mismatch.
ReplayBuffer load(const std::string& path, int expected_obs_dim = 0,
                  int expected_action_dim = 0);

struct TrajHeader {
  std::uint32_t version = 0;
  std::uint32_t obs_dim = 0;
  std::uint32_t action_dim = 0;
  std::uint64_t episode_count = 0;
};

TrajHeader read_header(const std::string& path);

}  // namespace cdred::buffers
