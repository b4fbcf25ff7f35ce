#include "cdred/world/two_hot.h"

#include <algorithm>
#include <cmath>

#include "cdred/common/error.h"

namespace cdred::world {

double symlog(double x) { return std::copysign(std::log1p(std::abs(x)), x); }

double symexp(double x) { return std::copysign(std::expm1(std::abs(x)), x); }

Vector BinGrid::centers() const {
  Vector c(bins);
  for (int i = 0; i < bins; ++i) c[i] = center(i);
  return c;
}

Vector two_hot_encode(double v, const BinGrid& grid) {
  if (!std::isfinite(v)) throw NumericalError("two_hot_encode: non-finite value");
  const double x = std::clamp(symlog(v), grid.vmin, grid.vmax);
  const double pos = (x - grid.vmin) / grid.width();
  const int lo = std::clamp(static_cast<int>(std::floor(pos)), 0, grid.bins - 2);
  const double frac = std::clamp(pos - lo, 0.0, 1.0);
  Vector out = Vector::Zero(grid.bins);
  out[lo] = 1.0 - frac;
  out[lo + 1] += frac;
  return out;
}

Matrix two_hot_encode(const Vector& values, const BinGrid& grid) {
  Matrix out(grid.bins, values.size());
  for (Eigen::Index i = 0; i < values.size(); ++i) out.col(i) = two_hot_encode(values[i], grid);
  return out;
}

double two_hot_decode(const Vector& probs, const BinGrid& grid) {
  if (probs.size() != grid.bins) throw DimensionError("two_hot_decode: wrong bin count");
  return symexp(probs.dot(grid.centers()));
}

Matrix softmax(const Matrix& logits) {
  Matrix out = logits.rowwise() - logits.colwise().maxCoeff();
  out = out.array().exp().matrix();
  const RowVector sums = out.colwise().sum();
  return out * sums.cwiseInverse().asDiagonal();
}

Matrix log_softmax(const Matrix& logits) {
  Matrix shifted = logits.rowwise() - logits.colwise().maxCoeff();
  const RowVector lse = shifted.array().exp().colwise().sum().log().matrix();
  return shifted.rowwise() - lse;
}

Vector decode_logits(const Matrix& logits, const BinGrid& grid) {
  if (logits.rows() != grid.bins) throw DimensionError("decode_logits: wrong bin count");
  const Vector y = softmax(logits).transpose() * grid.centers();
  return y.unaryExpr([](double v) { return symexp(v); });
}

Matrix decode_logits_gradient(const Matrix& logits, const BinGrid& grid) {
  const Matrix p = softmax(logits);
  const Vector c = grid.centers();
  const RowVector y = c.transpose() * p;
  Matrix g = p.cwiseProduct((-(y.replicate(grid.bins, 1))).colwise() + c);
  // d symexp(y) / dy = exp(|y|)
  const RowVector scale = y.array().abs().exp().matrix();
  return g * scale.asDiagonal();
}

}  // namespace cdred::world
