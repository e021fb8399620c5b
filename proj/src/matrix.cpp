#include "eden/matrix.hpp"

#include <cmath>

namespace eden::num {

bool Matrix::all_finite() const {
  for (double x : v)
    if (!std::isfinite(x)) return false;
  return true;
}

void shape_error(const std::string& op, const Matrix& a, const Matrix& b) {
  throw std::invalid_argument(op + ": shape mismatch (" + std::to_string(a.rows) + "x" +
                              std::to_string(a.cols) + " vs " + std::to_string(b.rows) + "x" +
                              std::to_string(b.cols) + ")");
}

Matrix matmul(const Matrix& a, const Matrix& b) {
  if (a.cols != b.rows) shape_error("matmul", a, b);
  Matrix c(a.rows, b.cols);
  if (b.cols == 1) {
    // matvec: contiguous dot products, the hot path during training
    for (int i = 0; i < a.rows; ++i) {
      const double* ar = &a.v[static_cast<size_t>(i) * a.cols];
      double acc = 0.0;
      for (int k = 0; k < a.cols; ++k) acc += ar[k] * b.v[k];
      c.v[i] = acc;
    }
    return c;
  }
  for (int i = 0; i < a.rows; ++i) {
    const double* ar = &a.v[static_cast<size_t>(i) * a.cols];
    double* cr = &c.v[static_cast<size_t>(i) * c.cols];
    for (int k = 0; k < a.cols; ++k) {
      const double aik = ar[k];
      const double* br = &b.v[static_cast<size_t>(k) * b.cols];
      for (int j = 0; j < b.cols; ++j) cr[j] += aik * br[j];
    }
  }
  return c;
}

Matrix add(const Matrix& a, const Matrix& b) {
  if (!a.same_shape(b)) shape_error("add", a, b);
  Matrix c = a;
  for (size_t i = 0; i < c.v.size(); ++i) c.v[i] += b.v[i];
  return c;
}

Matrix sub(const Matrix& a, const Matrix& b) {
  if (!a.same_shape(b)) shape_error("sub", a, b);
  Matrix c = a;
  for (size_t i = 0; i < c.v.size(); ++i) c.v[i] -= b.v[i];
  return c;
}

Matrix mul(const Matrix& a, const Matrix& b) {
  if (!a.same_shape(b)) shape_error("mul", a, b);
  Matrix c = a;
  for (size_t i = 0; i < c.v.size(); ++i) c.v[i] *= b.v[i];
  return c;
}

Matrix scale(const Matrix& a, double c0) {
  Matrix c = a;
  for (auto& x : c.v) x *= c0;
  return c;
}

Matrix add_const(const Matrix& a, double c0) {
  Matrix c = a;
  for (auto& x : c.v) x += c0;
  return c;
}

Matrix rsub_const(double c0, const Matrix& a) {
  Matrix c = a;
  for (auto& x : c.v) x = c0 - x;
  return c;
}

double stable_sigmoid(double x) {
  if (x >= 0.0) {
    return 1.0 / (1.0 + std::exp(-x));
  }
  const double e = std::exp(x);
  return e / (1.0 + e);
}

Matrix sigmoid(const Matrix& a) {
  Matrix c = a;
  for (auto& x : c.v) x = stable_sigmoid(x);
  return c;
}

Matrix tanh_m(const Matrix& a) {
  Matrix c = a;
  for (auto& x : c.v) x = std::tanh(x);
  return c;
}

Matrix log_m(const Matrix& a) {
  Matrix c = a;
  for (auto& x : c.v) x = std::log(x < kLogFloor ? kLogFloor : x);
  return c;
}

Matrix clamp(const Matrix& a, double lo, double hi) {
  Matrix c = a;
  for (auto& x : c.v) x = x < lo ? lo : (x > hi ? hi : x);
  return c;
}

Matrix concat_rows(const Matrix& a, const Matrix& b) {
  if (a.cols != b.cols) shape_error("concat_rows", a, b);
  Matrix c(a.rows + b.rows, a.cols);
  std::copy(a.v.begin(), a.v.end(), c.v.begin());
  std::copy(b.v.begin(), b.v.end(), c.v.begin() + a.v.size());
  return c;
}

Matrix transpose(const Matrix& a) {
  Matrix c(a.cols, a.rows);
  for (int i = 0; i < a.rows; ++i)
    for (int j = 0; j < a.cols; ++j) c(j, i) = a(i, j);
  return c;
}

double sum(const Matrix& a) {
  double acc = 0.0;
  for (double x : a.v) acc += x;
  return acc;
}

}  // namespace eden::num
