#pragma once

// Pooling and activation arithmetic shared by the forward and backward passes.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <vector>

#include "liftcg/graph.hpp"

namespace liftcg::detail {

// Component-wise sum of k argument rows (each of length d, row-major in
// `args`). For k > 2 each component is summed in ascending order, so the
// result is bit-identical under any permutation of the rows.
inline void pooled_sum(const double* args, std::size_t k, std::size_t d, double* out, std::vector<double>& scratch) {
  if (k == 1) {
    std::copy(args, args + d, out);
    return;
  }
  if (k == 2) {
    for (std::size_t i = 0; i < d; ++i) out[i] = args[i] + args[d + i];
    return;
  }
  scratch.resize(k);
  for (std::size_t i = 0; i < d; ++i) {
    for (std::size_t j = 0; j < k; ++j) scratch[j] = args[j * d + i];
    std::sort(scratch.begin(), scratch.end());
    double s = 0.0;
    for (double x : scratch) s += x;
    out[i] = s;
  }
}

inline double sigmoid(double z) { return 1.0 / (1.0 + std::exp(-z)); }

inline bool is_sum_family(ActivationKind k) {
  return k == ActivationKind::SigmoidSum || k == ActivationKind::TanhSum || k == ActivationKind::ReluSum ||
         k == ActivationKind::Sum || k == ActivationKind::Avg;
}

// Applies f to the pooled pre-activation z in place.
inline void apply_pooled(ActivationKind kind, std::size_t k, double* z, std::size_t d) {
  switch (kind) {
    case ActivationKind::SigmoidSum:
      for (std::size_t i = 0; i < d; ++i) z[i] = sigmoid(z[i]);
      break;
    case ActivationKind::TanhSum:
      for (std::size_t i = 0; i < d; ++i) z[i] = std::tanh(z[i]);
      break;
    case ActivationKind::ReluSum:
      for (std::size_t i = 0; i < d; ++i) z[i] = z[i] > 0.0 ? z[i] : 0.0;
      break;
    case ActivationKind::Avg: {
      const double kk = static_cast<double>(k);
      for (std::size_t i = 0; i < d; ++i) z[i] /= kk;
      break;
    }
    default:
      break;
  }
}

}  // namespace liftcg::detail
