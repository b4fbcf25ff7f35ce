#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "cdred/common/types.h"
#include "cdred/nn/param_store.h"

namespace cdred::nn {

enum class DType : std::uint32_t { kFloat32 = 1, kFloat64 = 2 };

struct ManifestEntry {
  std::string name;
  std::uint32_t rows = 0;
  std::uint32_t cols = 0;
  DType dtype = DType::kFloat64;
  std::uint64_t offset = 0;  // bytes from the start of the data section
};

// Flat binary container of named arrays.
//
// Layout (little-endian):
//   "CDREDCKP" | u32 version
//   u32 n_hashes  { u32 len, name, u64 hash }
//   u32 n_ints    { u32 len, name, u64 value }
//   u32 n_arrays  { u32 len, name, u32 rows, u32 cols, u32 dtype, u64 offset }
//   u64 data_bytes | data (column-major)
class Checkpoint {
 public:
  static constexpr std::uint32_t kVersion = 1;

  void set_spec_hash(const std::string& name, std::uint64_t hash);
  void set_integer(const std::string& name, std::uint64_t value);
  void set_array(const std::string& name, const Matrix& value,
                 DType dtype = DType::kFloat64);
  // Adds every array of the store as "<prefix>/<group>/<array>".
  void add_store(const std::string& prefix, const ParamStore& store,
                 DType dtype = DType::kFloat64);

  bool has_array(const std::string& name) const;
  const Matrix& array(const std::string& name) const;
  std::uint64_t integer(const std::string& name) const;
  std::uint64_t spec_hash(const std::string& name) const;
  bool has_integer(const std::string& name) const;

  // Copies arrays into `store`, validating every shape. Throws FormatError
  // on missing arrays or shape mismatch.
  void load_store(const std::string& prefix, ParamStore& store) const;
  // Throws FormatError when the recorded hash differs.
  void expect_spec_hash(const std::string& name, std::uint64_t hash) const;

  const std::vector<ManifestEntry>& manifest() const { return manifest_; }

  void save(const std::string& path) const;
  static Checkpoint load(const std::string& path);

 private:
  std::map<std::string, std::uint64_t> hashes_;
  std::map<std::string, std::uint64_t> integers_;
  std::map<std::string, Matrix> arrays_;
  std::vector<ManifestEntry> manifest_;  // insertion order
};

}  // namespace cdred::nn
