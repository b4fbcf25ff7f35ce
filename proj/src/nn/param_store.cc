#include "cdred/nn/param_store.h"

#include "cdred/common/error.h"

namespace cdred::nn {

ParamGroup& ParamStore::add_group(std::string name, bool trainable) {
  groups_.push_back(ParamGroup{std::move(name), trainable, {}});
  return groups_.back();
}

Matrix& ParamStore::array(const std::string& group_name,
                          const std::string& array_name) {
  const auto& self = *this;
  return const_cast<Matrix&>(self.array(group_name, array_name));
}

const Matrix& ParamStore::array(const std::string& group_name,
                                const std::string& array_name) const {
  for (const auto& g : groups_) {
    if (g.name != group_name) continue;
    for (const auto& a : g.arrays) {
      if (a.name == array_name) return a.value;
    }
  }
  throw DimensionError("no parameter array " + group_name + "/" + array_name);
}

ParamStore ParamStore::zeros_like() const {
  ParamStore out;
  for (const auto& g : groups_) {
    auto& ng = out.add_group(g.name, g.trainable);
    for (const auto& a : g.arrays) {
      ng.arrays.push_back({a.name, Matrix::Zero(a.value.rows(), a.value.cols())});
    }
  }
  return out;
}

void ParamStore::set_zero() {
  for (auto& g : groups_) {
    for (auto& a : g.arrays) a.value.setZero();
  }
}

void ParamStore::set_trainable(bool trainable) {
  for (auto& g : groups_) g.trainable = trainable;
}

bool ParamStore::any_trainable() const {
  for (const auto& g : groups_) {
    if (g.trainable) return true;
  }
  return false;
}

std::size_t ParamStore::scalar_count() const {
  std::size_t n = 0;
  for (const auto& g : groups_) {
    for (const auto& a : g.arrays) n += static_cast<std::size_t>(a.value.size());
  }
  return n;
}

bool ParamStore::all_finite() const {
  for (const auto& g : groups_) {
    for (const auto& a : g.arrays) {
      if (!a.value.allFinite()) return false;
    }
  }
  return true;
}

double ParamStore::squared_norm() const {
  double s = 0.0;
  for (const auto& g : groups_) {
    if (!g.trainable) continue;
    for (const auto& a : g.arrays) s += a.value.squaredNorm();
  }
  return s;
}

void ParamStore::scale(double factor) {
  for (auto& g : groups_) {
    for (auto& a : g.arrays) a.value *= factor;
  }
}

void ParamStore::add(const ParamStore& other) {
  check_same_layout(other);
  for (std::size_t i = 0; i < groups_.size(); ++i) {
    for (std::size_t j = 0; j < groups_[i].arrays.size(); ++j) {
      groups_[i].arrays[j].value += other.groups_[i].arrays[j].value;
    }
  }
}

void ParamStore::check_same_layout(const ParamStore& other) const {
  if (groups_.size() != other.groups_.size()) {
    throw DimensionError("parameter stores differ in group count");
  }
  for (std::size_t i = 0; i < groups_.size(); ++i) {
    const auto& a = groups_[i];
    const auto& b = other.groups_[i];
    if (a.name != b.name || a.arrays.size() != b.arrays.size()) {
      throw DimensionError("parameter group mismatch at " + a.name);
    }
    for (std::size_t j = 0; j < a.arrays.size(); ++j) {
      const auto& x = a.arrays[j].value;
      const auto& y = b.arrays[j].value;
      if (x.rows() != y.rows() || x.cols() != y.cols()) {
        throw DimensionError("shape mismatch for " + a.name + "/" +
                             a.arrays[j].name);
      }
    }
  }
}

bool ParamStore::same_values(const ParamStore& other) const {
  check_same_layout(other);
  for (std::size_t i = 0; i < groups_.size(); ++i) {
    for (std::size_t j = 0; j < groups_[i].arrays.size(); ++j) {
      if (groups_[i].arrays[j].value != other.groups_[i].arrays[j].value) {
        return false;
      }
    }
  }
  return true;
}

}  // namespace cdred::nn
