#include "cdred/nn/activations.h"

#include <cmath>
#include <string>

#include "cdred/common/error.h"

namespace cdred::nn {
namespace {

// Above this, tanh(softplus(x)) == 1 in double precision.
constexpr double kMishLinear = 20.0;

void check_groups(Eigen::Index rows, int group_size) {
  if (group_size <= 0 || rows % group_size != 0) {
    throw DimensionError("simnorm: width " + std::to_string(rows) +
                         " is not a multiple of group size " +
                         std::to_string(group_size));
  }
}

}  // namespace

double softplus(double x) {
  return x > 0.0 ? x + std::log1p(std::exp(-x)) : std::log1p(std::exp(x));
}

// tanh(log(1 + n)) = (n^2 + 2n) / (n^2 + 2n + 2) with n = e^x.
double mish(double x) {
  if (x > kMishLinear) return x;
  const double n = std::exp(x);
  const double q = n * (n + 2.0);
  return x * q / (q + 2.0);
}

double mish_derivative(double x) {
  if (x > kMishLinear) return 1.0;
  const double n = std::exp(x);
  const double q = n * (n + 2.0);
  const double t = q / (q + 2.0);
  const double sig = n / (1.0 + n);
  return t + x * (1.0 - t * t) * sig;
}

Matrix mish(const Matrix& x) {
  const Eigen::ArrayXXd n = x.array().min(kMishLinear).exp();
  const Eigen::ArrayXXd q = n * (n + 2.0);
  Matrix out = (x.array() * q / (q + 2.0)).matrix();
  return (x.array() > kMishLinear).select(x, out);
}

Matrix mish_derivative(const Matrix& x) {
  const Eigen::ArrayXXd n = x.array().min(kMishLinear).exp();
  const Eigen::ArrayXXd q = n * (n + 2.0);
  const Eigen::ArrayXXd t = q / (q + 2.0);
  const Eigen::ArrayXXd sig = n / (1.0 + n);
  Matrix out = (t + x.array() * (1.0 - t * t) * sig).matrix();
  return (x.array() > kMishLinear).select(Matrix::Ones(x.rows(), x.cols()), out);
}

Matrix simnorm(const Matrix& x, int group_size) {
  check_groups(x.rows(), group_size);
  Matrix out(x.rows(), x.cols());
  const Eigen::Index groups = x.rows() / group_size;
  for (Eigen::Index c = 0; c < x.cols(); ++c) {
    for (Eigen::Index g = 0; g < groups; ++g) {
      const auto seg = x.col(c).segment(g * group_size, group_size);
      const double m = seg.maxCoeff();
      auto dst = out.col(c).segment(g * group_size, group_size);
      dst = (seg.array() - m).exp().matrix();
      dst /= dst.sum();
    }
  }
  return out;
}

Vector simnorm(const Vector& v, int group_size) {
  return simnorm(Matrix(v), group_size).col(0);
}

Matrix simnorm_backward(const Matrix& s, const Matrix& ds, int group_size) {
  check_groups(s.rows(), group_size);
  Matrix dx(s.rows(), s.cols());
  const Eigen::Index groups = s.rows() / group_size;
  for (Eigen::Index c = 0; c < s.cols(); ++c) {
    for (Eigen::Index g = 0; g < groups; ++g) {
      const auto sg = s.col(c).segment(g * group_size, group_size);
      const auto dg = ds.col(c).segment(g * group_size, group_size);
      const double dot = sg.dot(dg);
      dx.col(c).segment(g * group_size, group_size) =
          (sg.array() * (dg.array() - dot)).matrix();
    }
  }
  return dx;
}

}  // namespace cdred::nn
