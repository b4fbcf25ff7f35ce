#include "cdred/nn/mlp.h"

#include <cmath>
#include <string>

#include "cdred/common/error.h"
#include "cdred/nn/activations.h"

namespace cdred::nn {
namespace {

constexpr double kLayerNormEps = 1e-5;

std::uint64_t fnv1a(std::uint64_t h, std::uint64_t v) {
  for (int i = 0; i < 8; ++i) {
    h ^= (v >> (8 * i)) & 0xffULL;
    h *= 0x100000001b3ULL;
  }
  return h;
}

}  // namespace

void MlpSpec::validate() const {
  if (input <= 0) throw DimensionError("mlp: input width must be positive");
  if (layers.empty()) throw DimensionError("mlp: at least one layer required");
  for (const auto& l : layers) {
    if (l.out <= 0) throw DimensionError("mlp: layer width must be positive");
    if (l.dropout < 0.0 || l.dropout >= 1.0) {
      throw ConfigError("mlp: dropout rate must lie in [0, 1)");
    }
    if (l.act == Activation::kSimNorm &&
        (simnorm_group <= 0 || l.out % simnorm_group != 0)) {
      throw DimensionError("mlp: simnorm width " + std::to_string(l.out) +
                           " not a multiple of group size " +
                           std::to_string(simnorm_group));
    }
  }
}

std::uint64_t MlpSpec::hash() const {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  h = fnv1a(h, static_cast<std::uint64_t>(input));
  h = fnv1a(h, static_cast<std::uint64_t>(simnorm_group));
  for (const auto& l : layers) {
    h = fnv1a(h, static_cast<std::uint64_t>(l.out));
    h = fnv1a(h, static_cast<std::uint64_t>(l.act));
    h = fnv1a(h, l.layer_norm ? 1 : 0);
    h = fnv1a(h, static_cast<std::uint64_t>(std::llround(l.dropout * 1e6)));
  }
  return h;
}

MlpSpec normed_mlp(int input, const std::vector<int>& hidden, int output,
                   Activation head_act, bool head_norm, double first_dropout) {
  MlpSpec spec;
  spec.input = input;
  for (std::size_t i = 0; i < hidden.size(); ++i) {
    spec.layers.push_back(
        {hidden[i], Activation::kMish, true, i == 0 ? first_dropout : 0.0});
  }
  spec.layers.push_back({output, head_act, head_norm, 0.0});
  return spec;
}

Mlp::Mlp(MlpSpec spec, std::string name, Rng& rng)
    : spec_(std::move(spec)), name_(std::move(name)) {
  spec_.validate();
  int fan_in = spec_.input;
  for (std::size_t i = 0; i < spec_.layers.size(); ++i) {
    const auto& l = spec_.layers[i];
    auto& g = params_.add_group(name_ + "." + std::to_string(i));
    // Variance-scaled uniform: Var[w] = 1 / fan_in.
    const double limit = std::sqrt(3.0 / fan_in);
    std::uniform_real_distribution<double> u(-limit, limit);
    Matrix w(l.out, fan_in);
    for (Eigen::Index c = 0; c < w.cols(); ++c) {
      for (Eigen::Index r = 0; r < w.rows(); ++r) w(r, c) = u(rng);
    }
    g.arrays.push_back({"weight", std::move(w)});
    g.arrays.push_back({"bias", Matrix::Zero(l.out, 1)});
    if (l.layer_norm) {
      g.arrays.push_back({"ln_scale", Matrix::Ones(l.out, 1)});
      g.arrays.push_back({"ln_offset", Matrix::Zero(l.out, 1)});
    }
    fan_in = l.out;
  }
}

void Mlp::zero_head() {
  auto& g = params_.groups().back();
  g.arrays[0].value.setZero();
  g.arrays[1].value.setZero();
  params_.touch();
}

Matrix Mlp::forward(const Matrix& x, Mode mode, Rng* rng, MlpCache* cache) const {
  if (x.rows() != spec_.input) {
    throw DimensionError(name_ + ": expected input width " +
                         std::to_string(spec_.input) + ", got " +
                         std::to_string(x.rows()));
  }
  if (cache != nullptr) {
    cache->layers.assign(spec_.layers.size(), LayerCache{});
    cache->version = params_.version();
  }
  Matrix h = x;
  for (std::size_t i = 0; i < spec_.layers.size(); ++i) {
    const auto& l = spec_.layers[i];
    const auto& g = params_.group(i);
    LayerCache* lc = cache != nullptr ? &cache->layers[i] : nullptr;
    if (lc != nullptr) lc->input = h;

    Matrix y = g.arrays[0].value * h;
    y.colwise() += g.arrays[1].value.col(0);

    if (mode == Mode::kTrain && l.dropout > 0.0) {
      if (rng == nullptr) throw ContractError(name_ + ": dropout needs an rng");
      std::bernoulli_distribution keep(1.0 - l.dropout);
      Matrix mask(y.rows(), y.cols());
      const double scale = 1.0 / (1.0 - l.dropout);
      for (Eigen::Index k = 0; k < mask.size(); ++k) {
        mask.data()[k] = keep(*rng) ? scale : 0.0;
      }
      y = y.cwiseProduct(mask);
      if (lc != nullptr) lc->mask = std::move(mask);
    }
    if (lc != nullptr) lc->pre = y;

    if (l.layer_norm) {
      const RowVector mean = y.colwise().mean();
      y.rowwise() -= mean;
      const RowVector var = y.array().square().colwise().mean();
      const RowVector inv_std = (var.array() + kLayerNormEps).rsqrt();
      y = y * inv_std.asDiagonal();
      if (lc != nullptr) {
        lc->normalized = y;
        lc->inv_std = inv_std;
      }
      y = g.arrays[2].value.col(0).asDiagonal() * y;
      y.colwise() += g.arrays[3].value.col(0);
    }

    switch (l.act) {
      case Activation::kMish:
        if (lc != nullptr) lc->act_state = y;
        y = mish(y);
        break;
      case Activation::kSimNorm:
        y = simnorm(y, spec_.simnorm_group);
        if (lc != nullptr) lc->act_state = y;
        break;
      case Activation::kNone:
        break;
    }
    h = std::move(y);
  }
  return h;
}

Matrix Mlp::backward(const MlpCache& cache, const Matrix& dy, ParamStore* grads) const {
  if (!cache.valid() || cache.layers.size() != spec_.layers.size()) {
    throw ContractError(name_ + ": backward without a matching forward cache");
  }
  if (cache.version != params_.version()) {
    throw ContractError(name_ + ": forward cache is stale (parameters changed)");
  }
  if (dy.rows() != spec_.output() || dy.cols() != cache.layers[0].input.cols()) {
    throw DimensionError(name_ + ": upstream gradient shape mismatch");
  }
  if (grads != nullptr) grads->check_same_layout(params_);

  Matrix d = dy;
  for (std::size_t ii = spec_.layers.size(); ii-- > 0;) {
    const auto& l = spec_.layers[ii];
    const auto& lc = cache.layers[ii];
    const auto& g = params_.group(ii);

    switch (l.act) {
      case Activation::kMish:
        d = d.cwiseProduct(mish_derivative(lc.act_state));
        break;
      case Activation::kSimNorm:
        d = simnorm_backward(lc.act_state, d, spec_.simnorm_group);
        break;
      case Activation::kNone:
        break;
    }

    const bool accumulate = grads != nullptr && grads->group(ii).trainable &&
                            g.trainable;
    if (l.layer_norm) {
      const Matrix& xhat = lc.normalized;
      if (accumulate) {
        auto& ga = grads->group(ii).arrays;
        ga[2].value.col(0) += d.cwiseProduct(xhat).rowwise().sum();
        ga[3].value.col(0) += d.rowwise().sum();
      }
      Matrix dxhat = g.arrays[2].value.col(0).asDiagonal() * d;
      const RowVector m1 = dxhat.colwise().mean();
      const RowVector m2 = dxhat.cwiseProduct(xhat).colwise().mean();
      dxhat.rowwise() -= m1;
      dxhat -= xhat * m2.asDiagonal();
      d = dxhat * lc.inv_std.asDiagonal();
    }

    if (lc.mask.size() > 0) d = d.cwiseProduct(lc.mask);

    if (accumulate) {
      auto& ga = grads->group(ii).arrays;
      ga[0].value.noalias() += d * lc.input.transpose();
      ga[1].value.col(0) += d.rowwise().sum();
    }
    d = g.arrays[0].value.transpose() * d;
  }
  return d;
}

}  // namespace cdred::nn
