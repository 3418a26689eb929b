#pragma once

#include <cstddef>
#include <string>
#include <vector>

namespace cascade {

using Vec = std::vector<double>;

// Dense row-major matrix. Feature dims here are small (42, a few hundred),
// so plain loops are enough; no sparse or blocked storage.
struct Matrix {
  std::size_t rows = 0;
  std::size_t cols = 0;
  Vec data;

  Matrix() = default;
  Matrix(std::size_t r, std::size_t c) : rows(r), cols(c), data(r * c, 0.0) {}

  double& operator()(std::size_t r, std::size_t c) { return data[r * cols + c]; }
  double operator()(std::size_t r, std::size_t c) const { return data[r * cols + c]; }
  std::size_t size() const { return rows * cols; }

  std::string shape_str() const;
};

// y = W x
Vec matvec(const Matrix& W, const Vec& x);
// x = W^T y
Vec matvec_t(const Matrix& W, const Vec& y);
// A += y x^T
void add_outer(Matrix& A, const Vec& y, const Vec& x);

// y += a * x
void axpy(double a, const Vec& x, Vec& y);
double dot(const Vec& a, const Vec& b);

bool all_finite(const Vec& v);
bool all_finite(const Matrix& m);

}  // namespace cascade
