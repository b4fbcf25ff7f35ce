#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <iterator>
#include <map>

#include "cdred/buffers/replay_buffer.h"
#include "cdred/buffers/traj_io.h"
#include "cdred/common/error.h"

using namespace cdred;
using namespace cdred::buffers;
namespace fs = std::filesystem;

namespace {

// Episode `id` of `length` steps on a 1-d chain: obs_t = 100 id + t.
void add_chain(ReplayBuffer& buf, std::int64_t id, int length, bool terminal_end = false) {
  for (int t = 0; t < length; ++t) {
    Transition tr;
    tr.obs = Vector::Constant(buf.obs_dim(), 100.0 * id + t);
    tr.next_obs = Vector::Constant(buf.obs_dim(), 100.0 * id + t + 1);
    tr.action = Vector::Constant(buf.action_dim(), 0.01 * t);
    tr.reward = 0.5 * t;
    tr.terminal = terminal_end && t == length - 1;
    tr.episode = id;
    tr.step = t;
    buf.add(tr);
  }
}

std::string read_bytes(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  return std::string(std::istreambuf_iterator<char>(in), {});
}

fs::path temp_path(const std::string& name) {
  const fs::path dir = fs::temp_directory_path() / "cdred_buffers_test";
  fs::create_directories(dir);
  return dir / name;
}

}  // namespace

TEST_CASE("transitions are stored per episode in order") {
  ReplayBuffer buf(2, 1);
  add_chain(buf, 0, 5);
  add_chain(buf, 1, 3);
  CHECK(buf.size() == 8);
  CHECK(buf.episode_count() == 2);
  const Transition t = buf.transition(1, 2);
  CHECK(t.obs(0) == 102.0);
  CHECK(t.next_obs(1) == 103.0);
  CHECK(t.reward == 1.0);
  CHECK(t.episode == 1);
  CHECK_THROWS_AS(buf.transition(1, 3), DimensionError);
}

TEST_CASE("buffer errors") {
  ReplayBuffer buf(2, 1);
  Transition bad;
  bad.obs = Vector::Zero(3);
  bad.next_obs = Vector::Zero(2);
  bad.action = Vector::Zero(1);
  CHECK_THROWS_AS(buf.add(bad), DimensionError);
  add_chain(buf, 0, 2);
  Transition skip;
  skip.obs = skip.next_obs = Vector::Zero(2);
  skip.action = Vector::Zero(1);
  skip.episode = 0;
  skip.step = 5;
  CHECK_THROWS_AS(buf.add(skip), ContractError);
  CHECK_THROWS_AS(ReplayBuffer(0, 1), DimensionError);
}

TEST_CASE("terminal flags close the episode") {
  ReplayBuffer buf(1, 1);
  add_chain(buf, 3, 4, true);
  CHECK(buf.episode(0).closed);
  CHECK(buf.transition(0, 3).terminal);
  add_chain(buf, 3, 1);
  CHECK(buf.episode_count() == 2);
}

TEST_CASE("valid starts and uniform start sampling") {
  ReplayBuffer buf(1, 1);
  add_chain(buf, 0, 2);  // too short for horizon 3
  add_chain(buf, 1, 6);  // 3 starts
  add_chain(buf, 2, 9);  // 6 starts
  CHECK(buf.valid_starts(3) == 9);
  CHECK(buf.valid_starts(0) == 17);
  CHECK(buf.valid_starts(8) == 1);
  Rng rng(5);
  std::map<std::pair<std::size_t, std::size_t>, int> counts;
  const int n = 9000;
  for (int i = 0; i < n; ++i) ++counts[buf.sample_start(3, rng)];
  CHECK(counts.size() == 9);
  double chi2 = 0.0;
  for (const auto& [k, c] : counts) {
    CHECK(k.first != 0);
    chi2 += (c - 1000.0) * (c - 1000.0) / 1000.0;
  }
  CHECK(chi2 < 26.12);  // 8 dof, p = 0.001
  ReplayBuffer empty(1, 1);
  CHECK_THROWS_AS(empty.sample_start(0, rng), NotReadyError);
}

TEST_CASE("segments are contiguous within one episode") {
  ReplayBuffer expert(1, 1), behavioral(1, 1);
  for (int e = 0; e < 4; ++e) add_chain(expert, e, 10);
  for (int e = 10; e < 13; ++e) add_chain(behavioral, e, 7);
  Rng rng(2);
  const SegmentBatch b = sample_segments(expert, behavioral, 32, 3, 0.25, rng);
  CHECK(b.batch_size() == 32);
  CHECK(b.expert_count == 8);
  CHECK(b.steps() == 4);
  for (int c = 0; c < 32; ++c) {
    CHECK((b.source[static_cast<std::size_t>(c)] == Source::kExpert) == (c < 8));
    const double id = std::floor(b.obs[0](0, c) / 100.0);
    CHECK((c < 8 ? id < 10 : id >= 10));
    for (int t = 0; t < 3; ++t) {
      CHECK(b.next_obs[static_cast<std::size_t>(t)](0, c) == b.obs[static_cast<std::size_t>(t) + 1](0, c));
    }
    for (int t = 0; t < 4; ++t) {
      CHECK(std::floor(b.obs[static_cast<std::size_t>(t)](0, c) / 100.0) == id);
    }
  }
}

TEST_CASE("segment sampling modes and errors") {
  ReplayBuffer expert(1, 1), behavioral(1, 1);
  add_chain(expert, 0, 10);
  Rng rng(3);
  const SegmentBatch only = sample_segments(expert, behavioral, 6, 2, 1.0, rng);
  CHECK(only.expert_count == 6);
  CHECK(only.behavioral_count() == 0);
  CHECK_THROWS_AS(sample_segments(expert, behavioral, 6, 2, 0.5, rng), NotReadyError);
  CHECK_THROWS_AS(sample_segments(expert, behavioral, 6, 2, 1.5, rng), ConfigError);
  CHECK_THROWS_AS(sample_segments(expert, behavioral, 6, -1, 1.0, rng), ConfigError);
  ReplayBuffer wide(2, 1);
  CHECK_THROWS_AS(sample_segments(expert, wide, 6, 2, 1.0, rng), DimensionError);
}

TEST_CASE("capacity evicts whole episodes oldest first") {
  ReplayBuffer buf(1, 1, 12);
  add_chain(buf, 0, 5);
  add_chain(buf, 1, 5);
  CHECK(buf.size() == 10);
  add_chain(buf, 2, 5);
  CHECK(buf.size() == 10);
  CHECK(buf.episode(0).id == 1);
  CHECK(buf.episode(1).id == 2);
  buf.truncate_episodes(1);
  CHECK(buf.size() == 5);
  CHECK(buf.episode_count() == 1);
}

TEST_CASE("save and load are byte-identical") {
  ReplayBuffer buf(3, 2);
  Rng rng(4);
  std::normal_distribution<double> n(0.0, 1.0);
  for (std::int64_t e = 0; e < 5; ++e) {
    for (int t = 0; t < 7 + e; ++t) {
      Transition tr;
      tr.obs = Vector(3);
      tr.next_obs = Vector(3);
      tr.action = Vector(2);
      for (int i = 0; i < 3; ++i) {
        tr.obs(i) = n(rng);
        tr.next_obs(i) = n(rng);
      }
      tr.action << n(rng), n(rng);
      tr.reward = n(rng);
      tr.episode = e;
      tr.step = t;
      buf.add(tr);
    }
  }
  const fs::path a = temp_path("a.traj"), b = temp_path("b.traj");
  save(buf, a.string());
  const ReplayBuffer loaded = load(a.string(), 3, 2);
  save(loaded, b.string());
  CHECK(read_bytes(a) == read_bytes(b));
  CHECK(loaded.size() == buf.size());
  CHECK(loaded.episode(3).obs == buf.episode(3).obs);
  CHECK(loaded.episode(4).id == 4);
  const TrajHeader h = read_header(a.string());
  CHECK(h.version == kTrajVersion);
  CHECK(h.episode_count == 5);
  CHECK_THROWS_AS(load(a.string(), 4, 2), FormatError);

  ReplayBuffer empty(3, 2);
  save(empty, b.string());
  CHECK(load(b.string()).size() == 0);
}

TEST_CASE("corrupt files are rejected") {
  ReplayBuffer buf(1, 1);
  add_chain(buf, 0, 4);
  const fs::path p = temp_path("c.traj");
  save(buf, p.string());
  std::string bytes = read_bytes(p);

  std::string bad_magic = bytes;
  bad_magic[0] = 'X';
  std::ofstream(p, std::ios::binary) << bad_magic;
  CHECK_THROWS_AS(load(p.string()), FormatError);

  std::ofstream(p, std::ios::binary | std::ios::trunc) << bytes.substr(0, bytes.size() - 3);
  CHECK_THROWS_AS(load(p.string()), FormatError);

  std::string bad_version = bytes;
  bad_version[8] = 9;
  std::ofstream(p, std::ios::binary | std::ios::trunc) << bad_version;
  CHECK_THROWS_AS(load(p.string()), FormatError);

  CHECK_THROWS_AS(load(temp_path("missing.traj").string()), FormatError);
}
