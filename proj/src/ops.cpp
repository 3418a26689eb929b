#include "cascade/ops.hpp"

#include <cmath>
#include <stdexcept>

namespace cascade {

Vec affine(const Vec& x, const Matrix& W, const Vec& b) {
  if (W.rows != b.size()) {
    throw std::invalid_argument("affine: W is " + W.shape_str() + ", b has length " +
                                std::to_string(b.size()));
  }
  Vec y = matvec(W, x);
  for (std::size_t i = 0; i < y.size(); ++i) y[i] += b[i];
  return y;
}

AffineGrads affine_backward(const Vec& x, const Matrix& W, const Vec& upstream) {
  AffineGrads g;
  g.dx = Vec(W.cols, 0.0);
  g.dW = Matrix(W.rows, W.cols);
  g.db = Vec(W.rows, 0.0);
  affine_backward_acc(x, W, upstream, g.dx, g.dW, g.db);
  return g;
}

void affine_backward_acc(const Vec& x, const Matrix& W, const Vec& upstream, Vec& dx_acc,
                         Matrix& dW_acc, Vec& db_acc) {
  if (upstream.size() != W.rows || x.size() != W.cols) {
    throw std::invalid_argument("affine_backward: W is " + W.shape_str() + ", x has length " +
                                std::to_string(x.size()) + ", upstream has length " +
                                std::to_string(upstream.size()));
  }
  Vec dx = matvec_t(W, upstream);
  axpy(1.0, dx, dx_acc);
  add_outer(dW_acc, upstream, x);
  axpy(1.0, upstream, db_acc);
}

double sigmoid_scalar(double x) { return 1.0 / (1.0 + std::exp(-x)); }

Vec sigmoid(const Vec& x) {
  Vec y(x.size());
  for (std::size_t i = 0; i < x.size(); ++i) y[i] = sigmoid_scalar(x[i]);
  return y;
}

Vec tanhv(const Vec& x) {
  Vec y(x.size());
  for (std::size_t i = 0; i < x.size(); ++i) y[i] = std::tanh(x[i]);
  return y;
}

Vec relu(const Vec& x) {
  Vec y(x.size());
  for (std::size_t i = 0; i < x.size(); ++i) y[i] = x[i] > 0.0 ? x[i] : 0.0;
  return y;
}

Vec sigmoid_backward(const Vec& y, const Vec& upstream) {
  Vec dx(y.size());
  for (std::size_t i = 0; i < y.size(); ++i) dx[i] = upstream[i] * y[i] * (1.0 - y[i]);
  return dx;
}

Vec tanhv_backward(const Vec& y, const Vec& upstream) {
  Vec dx(y.size());
  for (std::size_t i = 0; i < y.size(); ++i) dx[i] = upstream[i] * (1.0 - y[i] * y[i]);
  return dx;
}

Vec relu_backward(const Vec& x, const Vec& upstream) {
  Vec dx(x.size());
  for (std::size_t i = 0; i < x.size(); ++i) dx[i] = x[i] > 0.0 ? upstream[i] : 0.0;
  return dx;
}

DropoutResult dropout(const Vec& x, double rate, Mode mode, Rng& rng) {
  if (rate < 0.0 || rate >= 1.0) {
    throw std::invalid_argument("dropout: rate must be in [0,1), got " + std::to_string(rate));
  }
  DropoutResult r;
  r.y = x;
  r.mask = Vec(x.size(), 1.0);
  if (mode == Mode::Eval || rate == 0.0) return r;
  const double scale = 1.0 / (1.0 - rate);
  for (std::size_t i = 0; i < x.size(); ++i) {
    if (rng.uniform() < rate) {
      r.mask[i] = 0.0;
      r.y[i] = 0.0;
    } else {
      r.mask[i] = scale;
      r.y[i] = x[i] * scale;
    }
  }
  return r;
}

Vec dropout_backward(const Vec& mask, const Vec& upstream) {
  Vec dx(mask.size());
  for (std::size_t i = 0; i < mask.size(); ++i) dx[i] = upstream[i] * mask[i];
  return dx;
}

}  // namespace cascade
