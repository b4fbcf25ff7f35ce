#include "cdred/nn/checkpoint.h"

#include <bit>
#include <cstring>
#include <fstream>

#include "cdred/common/error.h"

namespace cdred::nn {
namespace {

static_assert(std::endian::native == std::endian::little,
              "checkpoint I/O assumes a little-endian host");

constexpr char kMagic[8] = {'C', 'D', 'R', 'E', 'D', 'C', 'K', 'P'};

template <typename T>
void put(std::ostream& os, T v) {
  os.write(reinterpret_cast<const char*>(&v), sizeof(T));
}

void put_str(std::ostream& os, const std::string& s) {
  put<std::uint32_t>(os, static_cast<std::uint32_t>(s.size()));
  os.write(s.data(), static_cast<std::streamsize>(s.size()));
}

template <typename T>
T get(std::istream& is) {
  T v{};
  if (!is.read(reinterpret_cast<char*>(&v), sizeof(T))) {
    throw FormatError("checkpoint: truncated file");
  }
  return v;
}

std::string get_str(std::istream& is) {
  const auto n = get<std::uint32_t>(is);
  if (n > (1u << 20)) throw FormatError("checkpoint: implausible name length");
  std::string s(n, '\0');
  if (!is.read(s.data(), n)) throw FormatError("checkpoint: truncated name");
  return s;
}

std::size_t dtype_size(DType t) { return t == DType::kFloat32 ? 4 : 8; }

}  // namespace

void Checkpoint::set_spec_hash(const std::string& name, std::uint64_t hash) {
  hashes_[name] = hash;
}

void Checkpoint::set_integer(const std::string& name, std::uint64_t value) {
  integers_[name] = value;
}

void Checkpoint::set_array(const std::string& name, const Matrix& value, DType dtype) {
  Matrix stored = value;
  if (dtype == DType::kFloat32) stored = value.cast<float>().cast<double>();
  if (arrays_.count(name) == 0) {
    manifest_.push_back({name, static_cast<std::uint32_t>(value.rows()),
                         static_cast<std::uint32_t>(value.cols()), dtype, 0});
  } else {
    for (auto& e : manifest_) {
      if (e.name == name) {
        e.rows = static_cast<std::uint32_t>(value.rows());
        e.cols = static_cast<std::uint32_t>(value.cols());
        e.dtype = dtype;
      }
    }
  }
  arrays_[name] = std::move(stored);
}

void Checkpoint::add_store(const std::string& prefix, const ParamStore& store,
                           DType dtype) {
  for (const auto& g : store.groups()) {
    for (const auto& a : g.arrays) {
      set_array(prefix + "/" + g.name + "/" + a.name, a.value, dtype);
    }
  }
}

bool Checkpoint::has_array(const std::string& name) const {
  return arrays_.count(name) != 0;
}

bool Checkpoint::has_integer(const std::string& name) const {
  return integers_.count(name) != 0;
}

const Matrix& Checkpoint::array(const std::string& name) const {
  auto it = arrays_.find(name);
  if (it == arrays_.end()) throw FormatError("checkpoint: missing array " + name);
  return it->second;
}

std::uint64_t Checkpoint::integer(const std::string& name) const {
  auto it = integers_.find(name);
  if (it == integers_.end()) throw FormatError("checkpoint: missing integer " + name);
  return it->second;
}

std::uint64_t Checkpoint::spec_hash(const std::string& name) const {
  auto it = hashes_.find(name);
  if (it == hashes_.end()) throw FormatError("checkpoint: missing spec hash " + name);
  return it->second;
}

void Checkpoint::expect_spec_hash(const std::string& name, std::uint64_t hash) const {
  if (spec_hash(name) != hash) {
    throw FormatError("checkpoint: architecture of '" + name +
                      "' does not match the configured network");
  }
}

void Checkpoint::load_store(const std::string& prefix, ParamStore& store) const {
  for (auto& g : store.groups()) {
    for (auto& a : g.arrays) {
      const std::string key = prefix + "/" + g.name + "/" + a.name;
      const Matrix& m = array(key);
      if (m.rows() != a.value.rows() || m.cols() != a.value.cols()) {
        throw FormatError("checkpoint: shape mismatch for " + key);
      }
      a.value = m;
    }
  }
  store.touch();
}

void Checkpoint::save(const std::string& path) const {
  std::ofstream os(path, std::ios::binary | std::ios::trunc);
  if (!os) throw FormatError("checkpoint: cannot open " + path + " for writing");
  os.write(kMagic, sizeof(kMagic));
  put<std::uint32_t>(os, kVersion);

  put<std::uint32_t>(os, static_cast<std::uint32_t>(hashes_.size()));
  for (const auto& [k, v] : hashes_) {
    put_str(os, k);
    put<std::uint64_t>(os, v);
  }
  put<std::uint32_t>(os, static_cast<std::uint32_t>(integers_.size()));
  for (const auto& [k, v] : integers_) {
    put_str(os, k);
    put<std::uint64_t>(os, v);
  }

  std::uint64_t offset = 0;
  put<std::uint32_t>(os, static_cast<std::uint32_t>(manifest_.size()));
  for (const auto& e : manifest_) {
    put_str(os, e.name);
    put<std::uint32_t>(os, e.rows);
    put<std::uint32_t>(os, e.cols);
    put<std::uint32_t>(os, static_cast<std::uint32_t>(e.dtype));
    put<std::uint64_t>(os, offset);
    offset += static_cast<std::uint64_t>(e.rows) * e.cols * dtype_size(e.dtype);
  }
  put<std::uint64_t>(os, offset);
  for (const auto& e : manifest_) {
    const Matrix& m = arrays_.at(e.name);
    if (e.dtype == DType::kFloat32) {
      const Eigen::MatrixXf f = m.cast<float>();
      os.write(reinterpret_cast<const char*>(f.data()),
               static_cast<std::streamsize>(f.size() * sizeof(float)));
    } else {
      os.write(reinterpret_cast<const char*>(m.data()),
               static_cast<std::streamsize>(m.size() * sizeof(double)));
    }
  }
  if (!os) throw FormatError("checkpoint: write failed for " + path);
}

Checkpoint Checkpoint::load(const std::string& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw FormatError("checkpoint: cannot open " + path);
  char magic[8];
  if (!is.read(magic, 8) || std::memcmp(magic, kMagic, 8) != 0) {
    throw FormatError("checkpoint: bad magic in " + path);
  }
  const auto version = get<std::uint32_t>(is);
  if (version != kVersion) {
    throw FormatError("checkpoint: unsupported version " + std::to_string(version));
  }
  Checkpoint ck;
  const auto n_hash = get<std::uint32_t>(is);
  for (std::uint32_t i = 0; i < n_hash; ++i) {
    auto name = get_str(is);
    ck.hashes_[name] = get<std::uint64_t>(is);
  }
  const auto n_int = get<std::uint32_t>(is);
  for (std::uint32_t i = 0; i < n_int; ++i) {
    auto name = get_str(is);
    ck.integers_[name] = get<std::uint64_t>(is);
  }
  const auto n_arr = get<std::uint32_t>(is);
  for (std::uint32_t i = 0; i < n_arr; ++i) {
    ManifestEntry e;
    e.name = get_str(is);
    e.rows = get<std::uint32_t>(is);
    e.cols = get<std::uint32_t>(is);
    const auto dt = get<std::uint32_t>(is);
    if (dt != 1 && dt != 2) throw FormatError("checkpoint: unknown dtype");
    e.dtype = static_cast<DType>(dt);
    e.offset = get<std::uint64_t>(is);
    ck.manifest_.push_back(e);
  }
  const auto data_bytes = get<std::uint64_t>(is);
  std::vector<char> data(data_bytes);
  if (!is.read(data.data(), static_cast<std::streamsize>(data_bytes))) {
    throw FormatError("checkpoint: truncated data section");
  }
  for (const auto& e : ck.manifest_) {
    const std::size_t n = static_cast<std::size_t>(e.rows) * e.cols;
    if (e.offset + n * dtype_size(e.dtype) > data_bytes) {
      throw FormatError("checkpoint: array " + e.name + " exceeds data section");
    }
    Matrix m(e.rows, e.cols);
    if (e.dtype == DType::kFloat32) {
      Eigen::MatrixXf f(e.rows, e.cols);
      std::memcpy(f.data(), data.data() + e.offset, n * sizeof(float));
      m = f.cast<double>();
    } else {
      std::memcpy(m.data(), data.data() + e.offset, n * sizeof(double));
    }
    ck.arrays_[e.name] = std::move(m);
  }
  return ck;
}

}  // namespace cdred::nn
