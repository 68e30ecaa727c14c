#pragma once

// Dense inner loops used by evaluation, backpropagation and the optimizer.
//
// Every table entry computes bit-identical results to the scalar reference:
// vector variants only parallelize across independent outputs and keep each
// output's accumulation order, and no entry uses fused multiply-add. `dot` is
// the one reduction; its reference order is four interleaved partial sums
// combined as (s0 + s1) + (s2 + s3), followed by a sequential tail.

#include <cstddef>
#include <string_view>

namespace liftcg::simd {

struct AdamStep {
  double lr;
  double beta1;
  double beta2;
  double eps;
  double bias1;  // 1 - beta1^t
  double bias2;  // 1 - beta2^t
};

struct KernelTable {
  std::string_view name;

  // y = a * x
  void (*scale)(double a, const double* x, double* y, std::size_t n);
  // y += a * x
  void (*axpy)(double a, const double* x, double* y, std::size_t n);
  // y = W x, W is rows x cols row-major
  void (*gemv)(const double* w, std::size_t rows, std::size_t cols, const double* x, double* y);
  // y += W^T g
  void (*gemv_t_acc)(const double* w, std::size_t rows, std::size_t cols, const double* g, double* y);
  // out += g x^T
  void (*outer_acc)(const double* g, std::size_t rows, const double* x, std::size_t cols, double* out);
  double (*dot)(const double* a, const double* b, std::size_t n);
  // y = max(y, x) elementwise; keeps y on ties
  void (*max_acc)(const double* x, double* y, std::size_t n);
  // in-place Adam update of w, m, v from gradient g
  void (*adam)(double* w, double* m, double* v, const double* g, std::size_t n, const AdamStep& step);
};

enum class Isa { Scalar, Avx2 };

const KernelTable& scalar_kernels();

// Null when the binary was built without the AVX2 variant or the CPU lacks AVX2.
const KernelTable* avx2_kernels();

// The table used by the library. Picked once: AVX2 when available, unless the
// environment variable LIFTCG_SIMD is set to "scalar".
const KernelTable& active_kernels();

// Override the active table (tests and benchmarks). Returns false when the
// requested ISA is unavailable; the active table is then unchanged.
bool select_kernels(Isa isa);

}  // namespace liftcg::simd
