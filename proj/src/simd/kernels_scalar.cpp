#include "kernels_internal.hpp"

#include <cmath>

namespace liftcg::simd::detail {

namespace {

void scale(double a, const double* x, double* y, std::size_t n) {
  for (std::size_t i = 0; i < n; ++i) y[i] = a * x[i];
}

void axpy(double a, const double* x, double* y, std::size_t n) {
  for (std::size_t i = 0; i < n; ++i) y[i] += a * x[i];
}

void gemv(const double* w, std::size_t rows, std::size_t cols, const double* x, double* y) {
  for (std::size_t r = 0; r < rows; ++r) {
    double t = 0.0;
    const double* row = w + r * cols;
    for (std::size_t c = 0; c < cols; ++c) t += row[c] * x[c];
    y[r] = t;
  }
}

void gemv_t_acc(const double* w, std::size_t rows, std::size_t cols, const double* g, double* y) {
  for (std::size_t c = 0; c < cols; ++c) {
    double t = 0.0;
    for (std::size_t r = 0; r < rows; ++r) t += w[r * cols + c] * g[r];
    y[c] += t;
  }
}

void outer_acc(const double* g, std::size_t rows, const double* x, std::size_t cols, double* out) {
  for (std::size_t r = 0; r < rows; ++r) {
    double* row = out + r * cols;
    for (std::size_t c = 0; c < cols; ++c) row[c] += g[r] * x[c];
  }
}

double dot(const double* a, const double* b, std::size_t n) {
  double s[4] = {0.0, 0.0, 0.0, 0.0};
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) {
    for (std::size_t j = 0; j < 4; ++j) s[j] += a[i + j] * b[i + j];
  }
  double r = (s[0] + s[1]) + (s[2] + s[3]);
  for (; i < n; ++i) r += a[i] * b[i];
  return r;
}

void max_acc(const double* x, double* y, std::size_t n) {
  for (std::size_t i = 0; i < n; ++i) y[i] = x[i] > y[i] ? x[i] : y[i];
}

void adam(double* w, double* m, double* v, const double* g, std::size_t n, const AdamStep& s) {
  const double one_minus_b1 = 1.0 - s.beta1;
  const double one_minus_b2 = 1.0 - s.beta2;
  for (std::size_t i = 0; i < n; ++i) {
    m[i] = s.beta1 * m[i] + one_minus_b1 * g[i];
    v[i] = s.beta2 * v[i] + one_minus_b2 * (g[i] * g[i]);
    const double m_hat = m[i] / s.bias1;
    const double v_hat = v[i] / s.bias2;
    w[i] -= s.lr * m_hat / (std::sqrt(v_hat) + s.eps);
  }
}

}  // namespace

const KernelTable kScalarTable{
    "scalar", scale, axpy, gemv, gemv_t_acc, outer_acc, dot, max_acc, adam,
};

}  // namespace liftcg::simd::detail
