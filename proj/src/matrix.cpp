#include "cascade/matrix.hpp"

#include <cmath>
#include <stdexcept>

namespace cascade {

std::string Matrix::shape_str() const {
  return std::to_string(rows) + "x" + std::to_string(cols);
}

Vec matvec(const Matrix& W, const Vec& x) {
  if (W.cols != x.size()) {
    throw std::invalid_argument("matvec: W is " + W.shape_str() + ", x has length " +
                                std::to_string(x.size()));
  }
  Vec y(W.rows, 0.0);
  const double* wp = W.data.data();
  for (std::size_t r = 0; r < W.rows; ++r) {
    double acc = 0.0;
    const double* row = wp + r * W.cols;
    for (std::size_t c = 0; c < W.cols; ++c) acc += row[c] * x[c];
    y[r] = acc;
  }
  return y;
}

Vec matvec_t(const Matrix& W, const Vec& y) {
  if (W.rows != y.size()) {
    throw std::invalid_argument("matvec_t: W is " + W.shape_str() + ", y has length " +
                                std::to_string(y.size()));
  }
  Vec x(W.cols, 0.0);
  const double* wp = W.data.data();
  for (std::size_t r = 0; r < W.rows; ++r) {
    const double yr = y[r];
    if (yr == 0.0) continue;
    const double* row = wp + r * W.cols;
    for (std::size_t c = 0; c < W.cols; ++c) x[c] += row[c] * yr;
  }
  return x;
}

void add_outer(Matrix& A, const Vec& y, const Vec& x) {
  if (A.rows != y.size() || A.cols != x.size()) {
    throw std::invalid_argument("add_outer: A is " + A.shape_str() + ", y has length " +
                                std::to_string(y.size()) + ", x has length " +
                                std::to_string(x.size()));
  }
  double* ap = A.data.data();
  for (std::size_t r = 0; r < A.rows; ++r) {
    const double yr = y[r];
    if (yr == 0.0) continue;
    double* row = ap + r * A.cols;
    for (std::size_t c = 0; c < A.cols; ++c) row[c] += yr * x[c];
  }
}

void axpy(double a, const Vec& x, Vec& y) {
  if (x.size() != y.size()) {
    throw std::invalid_argument("axpy: x has length " + std::to_string(x.size()) +
                                ", y has length " + std::to_string(y.size()));
  }
  for (std::size_t i = 0; i < x.size(); ++i) y[i] += a * x[i];
}

double dot(const Vec& a, const Vec& b) {
  if (a.size() != b.size()) {
    throw std::invalid_argument("dot: lengths " + std::to_string(a.size()) + " and " +
                                std::to_string(b.size()));
  }
  double acc = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) acc += a[i] * b[i];
  return acc;
}

bool all_finite(const Vec& v) {
  for (double x : v) {
    if (!std::isfinite(x)) return false;
  }
  return true;
}

bool all_finite(const Matrix& m) { return all_finite(m.data); }

}  // namespace cascade
