#pragma once

#include <cassert>
#include <cmath>
#include <cstdint>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace hyperite {

using Vec = std::vector<double>;

// Row-major dense matrix. Rows double as per-node vectors throughout the
// encoder, so span accessors are the main interface.
struct DenseMatrix {
  int rows = 0;
  int cols = 0;
  Vec data;

  DenseMatrix() = default;
  DenseMatrix(int r, int c) : rows(r), cols(c), data(static_cast<size_t>(r) * c, 0.0) {}

  double& at(int r, int c) { return data[static_cast<size_t>(r) * cols + c]; }
  double at(int r, int c) const { return data[static_cast<size_t>(r) * cols + c]; }

  std::span<double> row(int r) { return {data.data() + static_cast<size_t>(r) * cols, static_cast<size_t>(cols)}; }
  std::span<const double> row(int r) const {
    return {data.data() + static_cast<size_t>(r) * cols, static_cast<size_t>(cols)};
  }

  void fill(double v) { std::fill(data.begin(), data.end(), v); }
};

inline double dot(std::span<const double> a, std::span<const double> b) {
  assert(a.size() == b.size());
  double s = 0.0;
  for (size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
  return s;
}

inline double norm_sq(std::span<const double> a) { return dot(a, a); }
inline double norm(std::span<const double> a) { return std::sqrt(norm_sq(a)); }

inline void axpy(double alpha, std::span<const double> x, std::span<double> y) {
  assert(x.size() == y.size());
  for (size_t i = 0; i < x.size(); ++i) y[i] += alpha * x[i];
}

inline void scale(std::span<double> x, double alpha) {
  for (double& v : x) v *= alpha;
}

// y = W x + b  (b optional)
inline void affine(const DenseMatrix& W, std::span<const double> x, std::span<const double> b,
                   std::span<double> y) {
  if (static_cast<int>(x.size()) != W.cols || static_cast<int>(y.size()) != W.rows ||
      (!b.empty() && static_cast<int>(b.size()) != W.rows)) {
    throw std::invalid_argument("affine: shape mismatch");
  }
  for (int r = 0; r < W.rows; ++r) {
    double s = b.empty() ? 0.0 : b[r];
    const double* wr = W.data.data() + static_cast<size_t>(r) * W.cols;
    for (int c = 0; c < W.cols; ++c) s += wr[c] * x[c];
    y[r] = s;
  }
}

// y = W^T g (backward of affine w.r.t. the input)
inline void matvec_transposed(const DenseMatrix& W, std::span<const double> g, std::span<double> y) {
  assert(static_cast<int>(g.size()) == W.rows && static_cast<int>(y.size()) == W.cols);
  std::fill(y.begin(), y.end(), 0.0);
  for (int r = 0; r < W.rows; ++r) {
    const double* wr = W.data.data() + static_cast<size_t>(r) * W.cols;
    for (int c = 0; c < W.cols; ++c) y[c] += wr[c] * g[r];
  }
}

// G += g x^T (gradient accumulation for a weight matrix)
inline void outer_accumulate(DenseMatrix& G, std::span<const double> g, std::span<const double> x) {
  assert(static_cast<int>(g.size()) == G.rows && static_cast<int>(x.size()) == G.cols);
  for (int r = 0; r < G.rows; ++r) {
    double* gr = G.data.data() + static_cast<size_t>(r) * G.cols;
    for (int c = 0; c < G.cols; ++c) gr[c] += g[r] * x[c];
  }
}

inline void relu(std::span<const double> x, std::span<double> y) {
  assert(x.size() == y.size());
  for (size_t i = 0; i < x.size(); ++i) y[i] = x[i] > 0.0 ? x[i] : 0.0;
}

inline double sigmoid(double x) { return 1.0 / (1.0 + std::exp(-x)); }

inline bool all_finite(std::span<const double> x) {
  for (double v : x)
    if (!std::isfinite(v)) return false;
  return true;
}

}  // namespace hyperite
