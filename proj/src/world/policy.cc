#include "cdred/world/policy.h"

#include <cmath>
#include <numbers>

#include "cdred/nn/activations.h"

namespace cdred::world {
namespace {

const double kHalfLog2Pi = 0.5 * std::log(2.0 * std::numbers::pi);

}  // namespace

double log1m_tanh_sq(double u) {
  return 2.0 * (std::numbers::ln2 - u - nn::softplus(-2.0 * u));
}

Matrix squash_log_std(const Matrix& raw, double lo, double hi) {
  return (lo + 0.5 * (hi - lo) * (raw.array().tanh() + 1.0)).matrix();
}

PolicyOutput tanh_gaussian(const Matrix& mean, const Matrix& log_std, const Matrix& noise) {
  PolicyOutput out;
  out.mean = mean;
  out.log_std = log_std;
  out.noise = noise;
  const Matrix u = mean + (log_std.array().exp() * noise.array()).matrix();
  out.action = u.array().tanh().matrix();
  out.log_prob.resize(mean.cols());
  for (Eigen::Index c = 0; c < mean.cols(); ++c) {
    double lp = 0.0;
    for (Eigen::Index i = 0; i < mean.rows(); ++i) {
      const double e = noise(i, c);
      lp += -0.5 * e * e - log_std(i, c) - kHalfLog2Pi - log1m_tanh_sq(u(i, c));
    }
    out.log_prob[c] = lp;
  }
  return out;
}

Vector tanh_gaussian_log_prob(const Matrix& mean, const Matrix& log_std,
                              const Matrix& action) {
  Vector lp(mean.cols());
  for (Eigen::Index c = 0; c < mean.cols(); ++c) {
    double s = 0.0;
    for (Eigen::Index i = 0; i < mean.rows(); ++i) {
      const double u = std::atanh(action(i, c));
      const double e = (u - mean(i, c)) * std::exp(-log_std(i, c));
      s += -0.5 * e * e - log_std(i, c) - kHalfLog2Pi - log1m_tanh_sq(u);
    }
    lp[c] = s;
  }
  return lp;
}

Matrix standard_normal(Eigen::Index rows, Eigen::Index cols, Rng& rng) {
  std::normal_distribution<double> n(0.0, 1.0);
  Matrix m(rows, cols);
  for (Eigen::Index k = 0; k < m.size(); ++k) m.data()[k] = n(rng);
  return m;
}

}  // namespace cdred::world
