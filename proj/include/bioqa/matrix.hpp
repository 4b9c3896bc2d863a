#pragma once

#include <cassert>
#include <cmath>
#include <cstddef>
#include <vector>

#include "bioqa/rng.hpp"

namespace bioqa {

using Vector = std::vector<double>;

// Dense row-major matrix of doubles. All model math runs on this type;
// 64-bit floats keep gradient checks and golden fixtures stable.
class Matrix {
 public:
  Matrix() : rows_(0), cols_(0) {}
  Matrix(int rows, int cols)
      : rows_(rows), cols_(cols),
        data_(static_cast<size_t>(rows) * cols, 0.0) {}

  int rows() const { return rows_; }
  int cols() const { return cols_; }
  size_t size() const { return data_.size(); }

  double& operator()(int r, int c) {
    assert(r >= 0 && r < rows_ && c >= 0 && c < cols_);
    return data_[static_cast<size_t>(r) * cols_ + c];
  }
  double operator()(int r, int c) const {
    assert(r >= 0 && r < rows_ && c >= 0 && c < cols_);
    return data_[static_cast<size_t>(r) * cols_ + c];
  }

  double* row(int r) { return data_.data() + static_cast<size_t>(r) * cols_; }
  const double* row(int r) const {
    return data_.data() + static_cast<size_t>(r) * cols_;
  }

  Vector& data() { return data_; }
  const Vector& data() const { return data_; }

  void fill(double v) { data_.assign(data_.size(), v); }

  void randomize_uniform(Rng& rng, double scale) {
    for (double& v : data_) v = rng.uniform(-scale, scale);
  }

  bool same_shape(const Matrix& o) const {
    return rows_ == o.rows_ && cols_ == o.cols_;
  }

  bool all_finite() const {
    for (double v : data_)
      if (!std::isfinite(v)) return false;
    return true;
  }

 private:
  int rows_;
  int cols_;
  Vector data_;
};

inline double dot(const double* a, const double* b, int n) {
  double s = 0.0;
  for (int i = 0; i < n; ++i) s += a[i] * b[i];
  return s;
}

inline double dot(const Vector& a, const Vector& b) {
  assert(a.size() == b.size());
  return dot(a.data(), b.data(), static_cast<int>(a.size()));
}

inline void axpy(double alpha, const Vector& x, Vector& y) {
  assert(x.size() == y.size());
  for (size_t i = 0; i < x.size(); ++i) y[i] += alpha * x[i];
}

inline double sigmoid(double x) {
  if (x >= 0) {
    return 1.0 / (1.0 + std::exp(-x));
  }
  const double e = std::exp(x);
  return e / (1.0 + e);
}

// log(1 + exp(x)) without overflow; softplus(x) = -log(sigmoid(-x)).
inline double softplus(double x) {
  if (x > 0) return x + std::log1p(std::exp(-x));
  return std::log1p(std::exp(x));
}

}  // namespace bioqa
