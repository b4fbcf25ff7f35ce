#pragma once

#include "cdred/common/types.h"

namespace cdred::world {

double symlog(double x);
double symexp(double x);

// Uniform bin centers over [vmin, vmax] in symlog space.
struct BinGrid {
  int bins = 101;
  double vmin = -10.0;
  double vmax = 10.0;

  double width() const { return (vmax - vmin) / (bins - 1); }
  double center(int i) const { return vmin + i * width(); }
  Vector centers() const;
};

// symlog(v) clipped to the grid, split over the two nearest centers with
// linear interpolation weights. Returns a bins-long probability vector.
Vector two_hot_encode(double v, const BinGrid& grid);
// One column per value.
Matrix two_hot_encode(const Vector& values, const BinGrid& grid);

// symexp of the expected bin center under `probs`.
double two_hot_decode(const Vector& probs, const BinGrid& grid);

// Column-wise softmax.
Matrix softmax(const Matrix& logits);
Matrix log_softmax(const Matrix& logits);

// Decoded scalar per column of logits.
Vector decode_logits(const Matrix& logits, const BinGrid& grid);
// d decoded / d logits per column, same shape as logits.
Matrix decode_logits_gradient(const Matrix& logits, const BinGrid& grid);

}  // namespace cdred::world
