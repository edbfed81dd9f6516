#pragma once

#include <cmath>
#include <cstddef>
#include <vector>

#include "hjnt/common.hpp"
#include "hjnt/rng.hpp"

namespace hjnt {

// Dense row-major matrix. Vectors are represented as std::vector<T>; a Matrix
// with a single row is used where a tensor identity matters (Adam, serialization).
template <typename T>
struct Matrix {
  int rows = 0;
  int cols = 0;
  std::vector<T> data;

  Matrix() = default;
  Matrix(int r, int c, T fill = T(0)) : rows(r), cols(c), data(size_t(r) * size_t(c), fill) {}

  T* row(int i) { return data.data() + size_t(i) * size_t(cols); }
  const T* row(int i) const { return data.data() + size_t(i) * size_t(cols); }
  T& at(int r, int c) { return data[size_t(r) * size_t(cols) + size_t(c)]; }
  T at(int r, int c) const { return data[size_t(r) * size_t(cols) + size_t(c)]; }
  size_t size() const { return data.size(); }
  void zero() { std::fill(data.begin(), data.end(), T(0)); }

  bool same_shape(const Matrix& o) const { return rows == o.rows && cols == o.cols; }

  void fill_uniform(Rng& rng, double lo, double hi) {
    for (auto& v : data) v = T(rng.uniform(lo, hi));
  }

  template <typename U>
  Matrix<U> cast() const {
    Matrix<U> out(rows, cols);
    for (size_t i = 0; i < data.size(); ++i) out.data[i] = U(data[i]);
    return out;
  }
};

using MatF = Matrix<float>;
using MatD = Matrix<double>;

// y = A x  (A: m x n, x: n, y: m). Accumulates when acc is true.
template <typename T>
void matvec(const Matrix<T>& a, const T* x, T* y, bool acc = false) {
  for (int i = 0; i < a.rows; ++i) {
    const T* r = a.row(i);
    T s = acc ? y[i] : T(0);
    for (int j = 0; j < a.cols; ++j) s += r[j] * x[j];
    y[i] = s;
  }
}

// y += A^T x  (A: m x n, x: m, y: n).
template <typename T>
void matvec_t_acc(const Matrix<T>& a, const T* x, T* y) {
  for (int i = 0; i < a.rows; ++i) {
    const T* r = a.row(i);
    const T xi = x[i];
    if (xi == T(0)) continue;
    for (int j = 0; j < a.cols; ++j) y[j] += r[j] * xi;
  }
}

// A += u v^T  (u: m, v: n, A: m x n).
template <typename T>
void add_outer(Matrix<T>& a, const T* u, const T* v) {
  for (int i = 0; i < a.rows; ++i) {
    T* r = a.row(i);
    const T ui = u[i];
    if (ui == T(0)) continue;
    for (int j = 0; j < a.cols; ++j) r[j] += ui * v[j];
  }
}

template <typename T>
void axpy(size_t n, T alpha, const T* x, T* y) {
  for (size_t i = 0; i < n; ++i) y[i] += alpha * x[i];
}

template <typename T>
bool all_finite(const Matrix<T>& m) {
  for (T v : m.data) {
    if (!std::isfinite(double(v))) return false;
  }
  return true;
}

template <typename T>
double l2_norm(const std::vector<T>& v) {
  double s = 0.0;
  for (T x : v) s += double(x) * double(x);
  return std::sqrt(s);
}

}  // namespace hjnt
