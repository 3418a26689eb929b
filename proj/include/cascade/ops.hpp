#pragma once

#include "cascade/matrix.hpp"
#include "cascade/rng.hpp"

namespace cascade {

enum class Mode { Train, Eval };

// y = W x + b
Vec affine(const Vec& x, const Matrix& W, const Vec& b);

struct AffineGrads {
  Vec dx;
  Matrix dW;
  Vec db;
};
AffineGrads affine_backward(const Vec& x, const Matrix& W, const Vec& upstream);

// Accumulating form used by the model backward pass.
void affine_backward_acc(const Vec& x, const Matrix& W, const Vec& upstream, Vec& dx_acc,
                         Matrix& dW_acc, Vec& db_acc);

// Elementwise activations. Backward takes the forward *output* for sigmoid
// and tanh (the derivative is a function of the output) and the forward
// input for relu.
Vec sigmoid(const Vec& x);
Vec tanhv(const Vec& x);
Vec relu(const Vec& x);
Vec sigmoid_backward(const Vec& y, const Vec& upstream);
Vec tanhv_backward(const Vec& y, const Vec& upstream);
Vec relu_backward(const Vec& x, const Vec& upstream);

double sigmoid_scalar(double x);

// Inverted dropout: survivors are scaled by 1/(1-rate) at train time so
// Eval mode is exactly the identity. mask entries are 0 or 1/(1-rate).
struct DropoutResult {
  Vec y;
  Vec mask;
};
DropoutResult dropout(const Vec& x, double rate, Mode mode, Rng& rng);
Vec dropout_backward(const Vec& mask, const Vec& upstream);

}  // namespace cascade
