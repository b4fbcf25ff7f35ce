#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "cdred/common/types.h"
#include "cdred/nn/param_store.h"

namespace cdred::nn {

enum class Activation { kNone, kMish, kSimNorm };

enum class Mode { kTrain, kEval };

struct LayerSpec {
  int out = 0;
  Activation act = Activation::kNone;
  bool layer_norm = false;
  double dropout = 0.0;  // applied after the affine map, train mode only
};

struct MlpSpec {
  int input = 0;
  std::vector<LayerSpec> layers;
  int simnorm_group = 8;

  int output() const { return layers.empty() ? input : layers.back().out; }
  // Throws DimensionError / ConfigError on an ill-formed stack.
  void validate() const;
  // Stable structural hash, recorded in checkpoint headers.
  std::uint64_t hash() const;
};

// Hidden layers are LayerNorm + Mish; the head is configurable.
MlpSpec normed_mlp(int input, const std::vector<int>& hidden, int output,
                   Activation head_act, bool head_norm, double first_dropout = 0.0);

struct LayerCache {
  Matrix input;
  Matrix pre;         // affine output (post-dropout)
  Matrix mask;        // dropout mask, empty when unused
  Matrix normalized;  // LayerNorm x-hat, empty when unused
  RowVector inv_std;
  Matrix act_state;  // Mish: activation input. SimNorm: activation output.
};

struct MlpCache {
  std::uint64_t version = 0;
  std::vector<LayerCache> layers;
  bool valid() const { return !layers.empty(); }
};

// Fixed stack of NormedLinear layers:
//   y = act(LayerNorm(dropout(W x + b)))
// Each layer owns one ParamGroup named "<name>.<index>".
class Mlp {
 public:
  Mlp() = default;
  Mlp(MlpSpec spec, std::string name, Rng& rng);

  // `x` is input x batch. `rng` is required only in train mode with dropout.
  Matrix forward(const Matrix& x, Mode mode = Mode::kEval, Rng* rng = nullptr,
                 MlpCache* cache = nullptr) const;

  // Accumulates parameter gradients into `grads` (same layout as params(),
  // frozen groups untouched; pass nullptr to skip) and returns dL/dx.
  Matrix backward(const MlpCache& cache, const Matrix& dy, ParamStore* grads) const;

  const MlpSpec& spec() const { return spec_; }
  const std::string& name() const { return name_; }
  ParamStore& params() { return params_; }
  const ParamStore& params() const { return params_; }

  void set_trainable(bool trainable) { params_.set_trainable(trainable); }
  // Zeroes the last layer's weights and bias.
  void zero_head();

 private:
  MlpSpec spec_;
  std::string name_;
  ParamStore params_;
};

}  // namespace cdred::nn
