#pragma once

#include "cdred/common/types.h"

namespace cdred::nn {

// x * tanh(softplus(x)).
double mish(double x);
double mish_derivative(double x);

Matrix mish(const Matrix& x);
// Elementwise d mish / dx evaluated at x.
Matrix mish_derivative(const Matrix& x);

// Softmax over contiguous groups of `group_size` rows, independently per
// column. Throws DimensionError when rows are not a multiple of group_size.
Matrix simnorm(const Matrix& x, int group_size);
Vector simnorm(const Vector& v, int group_size);
// Given the simnorm output s and upstream ds, returns dx.
Matrix simnorm_backward(const Matrix& s, const Matrix& ds, int group_size);

// Numerically stable log(1 + exp(x)).
double softplus(double x);

}  // namespace cdred::nn
