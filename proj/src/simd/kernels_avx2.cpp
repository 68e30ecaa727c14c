// AVX2 variants of the dense kernels. Compiled with per-function target
// attributes so the rest of the binary stays baseline x86-64.

#include "kernels_internal.hpp"

#if LIFTCG_HAVE_AVX2

#include <immintrin.h>

#include <cmath>

#define LIFTCG_AVX2 __attribute__((target("avx2")))

namespace liftcg::simd::detail {

namespace {

LIFTCG_AVX2 void scale(double a, const double* x, double* y, std::size_t n) {
  const __m256d va = _mm256_set1_pd(a);
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) _mm256_storeu_pd(y + i, _mm256_mul_pd(va, _mm256_loadu_pd(x + i)));
  for (; i < n; ++i) y[i] = a * x[i];
}

LIFTCG_AVX2 void axpy(double a, const double* x, double* y, std::size_t n) {
  const __m256d va = _mm256_set1_pd(a);
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) {
    const __m256d prod = _mm256_mul_pd(va, _mm256_loadu_pd(x + i));
    _mm256_storeu_pd(y + i, _mm256_add_pd(_mm256_loadu_pd(y + i), prod));
  }
  for (; i < n; ++i) y[i] += a * x[i];
}

// Four rows at a time; each row still sums its columns left to right.
LIFTCG_AVX2 void gemv(const double* w, std::size_t rows, std::size_t cols, const double* x, double* y) {
  std::size_t r = 0;
  for (; r + 4 <= rows; r += 4) {
    __m256d t = _mm256_setzero_pd();
    const double* r0 = w + r * cols;
    const double* r1 = r0 + cols;
    const double* r2 = r1 + cols;
    const double* r3 = r2 + cols;
    for (std::size_t c = 0; c < cols; ++c) {
      const __m256d column = _mm256_set_pd(r3[c], r2[c], r1[c], r0[c]);
      t = _mm256_add_pd(t, _mm256_mul_pd(column, _mm256_set1_pd(x[c])));
    }
    _mm256_storeu_pd(y + r, t);
  }
  for (; r < rows; ++r) {
    double t = 0.0;
    const double* row = w + r * cols;
    for (std::size_t c = 0; c < cols; ++c) t += row[c] * x[c];
    y[r] = t;
  }
}

LIFTCG_AVX2 void gemv_t_acc(const double* w, std::size_t rows, std::size_t cols, const double* g, double* y) {
  std::size_t c = 0;
  for (; c + 4 <= cols; c += 4) {
    __m256d t = _mm256_setzero_pd();
    for (std::size_t r = 0; r < rows; ++r) {
      t = _mm256_add_pd(t, _mm256_mul_pd(_mm256_loadu_pd(w + r * cols + c), _mm256_set1_pd(g[r])));
    }
    _mm256_storeu_pd(y + c, _mm256_add_pd(_mm256_loadu_pd(y + c), t));
  }
  for (; c < cols; ++c) {
    double t = 0.0;
    for (std::size_t r = 0; r < rows; ++r) t += w[r * cols + c] * g[r];
    y[c] += t;
  }
}

LIFTCG_AVX2 void outer_acc(const double* g, std::size_t rows, const double* x, std::size_t cols, double* out) {
  for (std::size_t r = 0; r < rows; ++r) {
    double* row = out + r * cols;
    const __m256d vg = _mm256_set1_pd(g[r]);
    std::size_t c = 0;
    for (; c + 4 <= cols; c += 4) {
      const __m256d prod = _mm256_mul_pd(vg, _mm256_loadu_pd(x + c));
      _mm256_storeu_pd(row + c, _mm256_add_pd(_mm256_loadu_pd(row + c), prod));
    }
    for (; c < cols; ++c) row[c] += g[r] * x[c];
  }
}

LIFTCG_AVX2 double dot(const double* a, const double* b, std::size_t n) {
  __m256d acc = _mm256_setzero_pd();
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) {
    acc = _mm256_add_pd(acc, _mm256_mul_pd(_mm256_loadu_pd(a + i), _mm256_loadu_pd(b + i)));
  }
  alignas(32) double s[4];
  _mm256_store_pd(s, acc);
  double r = (s[0] + s[1]) + (s[2] + s[3]);
  for (; i < n; ++i) r += a[i] * b[i];
  return r;
}

LIFTCG_AVX2 void max_acc(const double* x, double* y, std::size_t n) {
  std::size_t i = 0;
  // _mm256_max_pd(a, b) returns b unless a > b, matching the scalar tie rule.
  for (; i + 4 <= n; i += 4) _mm256_storeu_pd(y + i, _mm256_max_pd(_mm256_loadu_pd(x + i), _mm256_loadu_pd(y + i)));
  for (; i < n; ++i) y[i] = x[i] > y[i] ? x[i] : y[i];
}

LIFTCG_AVX2 void adam(double* w, double* m, double* v, const double* g, std::size_t n, const AdamStep& s) {
  const double one_minus_b1 = 1.0 - s.beta1;
  const double one_minus_b2 = 1.0 - s.beta2;
  const __m256d b1 = _mm256_set1_pd(s.beta1);
  const __m256d b2 = _mm256_set1_pd(s.beta2);
  const __m256d c1 = _mm256_set1_pd(one_minus_b1);
  const __m256d c2 = _mm256_set1_pd(one_minus_b2);
  const __m256d bias1 = _mm256_set1_pd(s.bias1);
  const __m256d bias2 = _mm256_set1_pd(s.bias2);
  const __m256d lr = _mm256_set1_pd(s.lr);
  const __m256d eps = _mm256_set1_pd(s.eps);
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) {
    const __m256d gi = _mm256_loadu_pd(g + i);
    const __m256d mi = _mm256_add_pd(_mm256_mul_pd(b1, _mm256_loadu_pd(m + i)), _mm256_mul_pd(c1, gi));
    const __m256d vi =
        _mm256_add_pd(_mm256_mul_pd(b2, _mm256_loadu_pd(v + i)), _mm256_mul_pd(c2, _mm256_mul_pd(gi, gi)));
    _mm256_storeu_pd(m + i, mi);
    _mm256_storeu_pd(v + i, vi);
    const __m256d m_hat = _mm256_div_pd(mi, bias1);
    const __m256d v_hat = _mm256_div_pd(vi, bias2);
    const __m256d step = _mm256_div_pd(_mm256_mul_pd(lr, m_hat), _mm256_add_pd(_mm256_sqrt_pd(v_hat), eps));
    _mm256_storeu_pd(w + i, _mm256_sub_pd(_mm256_loadu_pd(w + i), step));
  }
  for (; i < n; ++i) {
    m[i] = s.beta1 * m[i] + one_minus_b1 * g[i];
    v[i] = s.beta2 * v[i] + one_minus_b2 * (g[i] * g[i]);
    const double m_hat = m[i] / s.bias1;
    const double v_hat = v[i] / s.bias2;
    w[i] -= s.lr * m_hat / (std::sqrt(v_hat) + s.eps);
  }
}

}  // namespace

const KernelTable kAvx2Table{
    "avx2", scale, axpy, gemv, gemv_t_acc, outer_acc, dot, max_acc, adam,
};

}  // namespace liftcg::simd::detail

#endif  // LIFTCG_HAVE_AVX2
