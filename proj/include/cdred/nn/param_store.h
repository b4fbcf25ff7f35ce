#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "cdred/common/types.h"

namespace cdred::nn {

struct ParamArray {
  std::string name;
  Matrix value;  // vectors are stored as n x 1
};

// One layer's worth of parameters. Frozen groups never receive gradients
// or optimizer updates.
struct ParamGroup {
  std::string name;
  bool trainable = true;
  std::vector<ParamArray> arrays;
};

// Ordered, named collection of parameter groups. The version counter is
// bumped on every in-place mutation so forward caches can detect staleness.
class ParamStore {
 public:
  ParamGroup& add_group(std::string name, bool trainable = true);

  std::vector<ParamGroup>& groups() { return groups_; }
  const std::vector<ParamGroup>& groups() const { return groups_; }

  ParamGroup& group(std::size_t i) { return groups_.at(i); }
  const ParamGroup& group(std::size_t i) const { return groups_.at(i); }

  // Throws DimensionError when the name is unknown.
  Matrix& array(const std::string& group_name, const std::string& array_name);
  const Matrix& array(const std::string& group_name,
                      const std::string& array_name) const;

  // Same layout, all values zero.
  ParamStore zeros_like() const;
  void set_zero();

  void set_trainable(bool trainable);
  bool any_trainable() const;

  std::size_t scalar_count() const;
  bool all_finite() const;
  // Squared L2 norm over trainable groups only.
  double squared_norm() const;
  void scale(double factor);
  // this += other (layouts must match).
  void add(const ParamStore& other);

  // Throws DimensionError on any layout difference.
  void check_same_layout(const ParamStore& other) const;
  bool same_values(const ParamStore& other) const;

  std::uint64_t version() const { return version_; }
  void touch() { ++version_; }

 private:
  std::vector<ParamGroup> groups_;
  std::uint64_t version_ = 0;
};

}  // namespace cdred::nn
