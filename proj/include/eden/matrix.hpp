#pragma once

#include <cstddef>
#include <initializer_list>
#include <stdexcept>
#include <string>
#include <vector>

namespace eden::num {

/// Dense row-major matrix of doubles. Vectors are n x 1 matrices.
struct Matrix {
  int rows = 0;
  int cols = 0;
  std::vector<double> v;

  Matrix() = default;
  Matrix(int r, int c) : rows(r), cols(c), v(static_cast<size_t>(r) * c, 0.0) {
    if (r < 0 || c < 0) throw std::invalid_argument("Matrix: negative dimension");
  }
  Matrix(int r, int c, std::vector<double> data) : rows(r), cols(c), v(std::move(data)) {
    if (v.size() != static_cast<size_t>(r) * c)
      throw std::invalid_argument("Matrix: data length does not match rows*cols");
  }

  static Matrix zeros(int r, int c) { return Matrix(r, c); }
  static Matrix full(int r, int c, double x) {
    Matrix m(r, c);
    for (auto& e : m.v) e = x;
    return m;
  }
  static Matrix identity(int n) {
    Matrix m(n, n);
    for (int i = 0; i < n; ++i) m(i, i) = 1.0;
    return m;
  }
  /// Row-major literal, e.g. Matrix::of(2, 2, {1, 2, 3, 4}).
  static Matrix of(int r, int c, std::initializer_list<double> xs) {
    return Matrix(r, c, std::vector<double>(xs));
  }

  double& operator()(int i, int j) { return v[static_cast<size_t>(i) * cols + j]; }
  double operator()(int i, int j) const { return v[static_cast<size_t>(i) * cols + j]; }
  size_t size() const { return v.size(); }
  bool same_shape(const Matrix& o) const { return rows == o.rows && cols == o.cols; }
  bool all_finite() const;
};

[[noreturn]] void shape_error(const std::string& op, const Matrix& a, const Matrix& b);

// Eager kernels. The tape calls these same functions, so taped and untaped
// evaluation of the same expression are bit-identical.
Matrix matmul(const Matrix& a, const Matrix& b);
Matrix add(const Matrix& a, const Matrix& b);
Matrix sub(const Matrix& a, const Matrix& b);
Matrix mul(const Matrix& a, const Matrix& b);
Matrix scale(const Matrix& a, double c);
Matrix add_const(const Matrix& a, double c);
Matrix rsub_const(double c, const Matrix& a);  // c - a, entrywise
Matrix sigmoid(const Matrix& a);
Matrix tanh_m(const Matrix& a);
Matrix log_m(const Matrix& a);  // log(max(x, kLogFloor))
Matrix clamp(const Matrix& a, double lo, double hi);
Matrix concat_rows(const Matrix& a, const Matrix& b);  // stack a on top of b
Matrix transpose(const Matrix& a);
double sum(const Matrix& a);

/// Branching sigmoid that never overflows exp().
double stable_sigmoid(double x);

inline constexpr double kLogFloor = 1e-300;

}  // namespace eden::num
