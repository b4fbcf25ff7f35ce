#pragma once

#include "cdred/common/types.h"

namespace cdred::world {

enum class PolicyMode { kStochastic, kDeterministic };

// Batched squashed-Gaussian policy output (action_dim x batch each).
struct PolicyOutput {
  Matrix mean;
  Matrix log_std;
  Matrix action;    // tanh(mean + std * noise); tanh(mean) when deterministic
  Vector log_prob;  // includes the tanh change-of-variables correction
  Matrix noise;     // standard-normal draws used for the sample
  Matrix raw_log_std;
};

// Smoothly maps an unbounded head output onto [lo, hi].
Matrix squash_log_std(const Matrix& raw, double lo, double hi);

// Reparameterized sample for given noise.
PolicyOutput tanh_gaussian(const Matrix& mean, const Matrix& log_std, const Matrix& noise);

// log density of tanh(u), u ~ N(mean, std^2), evaluated at `action` in (-1, 1).
Vector tanh_gaussian_log_prob(const Matrix& mean, const Matrix& log_std,
                              const Matrix& action);

Matrix standard_normal(Eigen::Index rows, Eigen::Index cols, Rng& rng);

// log(1 - tanh(u)^2), stable for large |u|.
double log1m_tanh_sq(double u);

}  // namespace cdred::world
