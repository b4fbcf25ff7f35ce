#include "cdred/buffers/traj_io.h"

#include <bit>
#include <cstring>
#include <fstream>

#include "cdred/common/error.h"

namespace cdred::buffers {
namespace {

static_assert(std::endian::native == std::endian::little,
              ".traj I/O assumes a little-endian host");

constexpr char kMagic[8] = {'C', 'D', 'T', 'R', 'A', 'J', '\0', '\0'};

template <typename T>
void put(std::ostream& os, T v) {
  os.write(reinterpret_cast<const char*>(&v), sizeof(T));
}

void put_floats(std::ostream& os, const std::vector<float>& v) {
  os.write(reinterpret_cast<const char*>(v.data()),
           static_cast<std::streamsize>(v.size() * sizeof(float)));
}

template <typename T>
T get(std::istream& is, const std::string& path) {
  T v{};
  if (!is.read(reinterpret_cast<char*>(&v), sizeof(T))) {
    throw FormatError("traj: truncated file " + path);
  }
  return v;
}

std::vector<float> get_floats(std::istream& is, std::size_t n, const std::string& path) {
  std::vector<float> v(n);
  if (!is.read(reinterpret_cast<char*>(v.data()),
               static_cast<std::streamsize>(n * sizeof(float)))) {
    throw FormatError("traj: truncated episode data in " + path);
  }
  return v;
}

TrajHeader read_header(std::istream& is, const std::string& path) {
  char magic[8];
  if (!is.read(magic, 8) || std::memcmp(magic, kMagic, 8) != 0) {
    throw FormatError("traj: bad magic in " + path);
  }
  TrajHeader h;
  h.version = get<std::uint32_t>(is, path);
  if (h.version != kTrajVersion) {
    throw FormatError("traj: unsupported version " + std::to_string(h.version));
  }
  h.obs_dim = get<std::uint32_t>(is, path);
  h.action_dim = get<std::uint32_t>(is, path);
  h.episode_count = get<std::uint64_t>(is, path);
  if (h.obs_dim == 0 || h.action_dim == 0) throw FormatError("traj: zero width in header");
  return h;
}

}  // namespace

void save(const ReplayBuffer& buffer, const std::string& path) {
  std::ofstream os(path, std::ios::binary | std::ios::trunc);
  if (!os) throw FormatError("traj: cannot open " + path + " for writing");
  os.write(kMagic, 8);
  put<std::uint32_t>(os, kTrajVersion);
  put<std::uint32_t>(os, static_cast<std::uint32_t>(buffer.obs_dim()));
  put<std::uint32_t>(os, static_cast<std::uint32_t>(buffer.action_dim()));
  put<std::uint64_t>(os, buffer.episode_count());
  for (const auto& e : buffer.episodes()) {
    put<std::uint64_t>(os, e.length());
    put<std::int64_t>(os, e.id);
    put_floats(os, e.obs);
    put_floats(os, e.actions);
    put_floats(os, e.rewards);
    put_floats(os, e.next_obs);
    put_floats(os, e.terminal);
  }
  if (!os) throw FormatError("traj: write failed for " + path);
}

TrajHeader read_header(const std::string& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw FormatError("traj: cannot open " + path);
  return read_header(is, path);
}

ReplayBuffer load(const std::string& path, int expected_obs_dim, int expected_action_dim) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw FormatError("traj: cannot open " + path);
  const TrajHeader h = read_header(is, path);
  if (expected_obs_dim > 0 && h.obs_dim != static_cast<std::uint32_t>(expected_obs_dim)) {
    throw FormatError("traj: observation width " + std::to_string(h.obs_dim) +
                      " in " + path + ", expected " + std::to_string(expected_obs_dim));
  }
  if (expected_action_dim > 0 &&
      h.action_dim != static_cast<std::uint32_t>(expected_action_dim)) {
    throw FormatError("traj: action width " + std::to_string(h.action_dim) + " in " +
                      path + ", expected " + std::to_string(expected_action_dim));
  }
  ReplayBuffer buffer(static_cast<int>(h.obs_dim), static_cast<int>(h.action_dim));
  for (std::uint64_t i = 0; i < h.episode_count; ++i) {
    const auto len = get<std::uint64_t>(is, path);
    if (len > (1ULL << 32)) throw FormatError("traj: implausible episode length");
    Episode e;
    e.id = get<std::int64_t>(is, path);
    e.obs = get_floats(is, len * h.obs_dim, path);
    e.actions = get_floats(is, len * h.action_dim, path);
    e.rewards = get_floats(is, len, path);
    e.next_obs = get_floats(is, len * h.obs_dim, path);
    e.terminal = get_floats(is, len, path);
    buffer.add_episode(std::move(e));
  }
  return buffer;
}

}  // namespace cdred::buffers
