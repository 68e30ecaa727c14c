#pragma once

// Central-difference gradients, the reference for backward().

#include <span>
#include <vector>

#include "liftcg/graph.hpp"

namespace liftcg::testing {

// sum over output slots of <upstream[i], output_i(w)>
inline double weighted_outputs(const ComputationGraph& g, std::span<const Tensor> w,
                               std::span<const std::vector<double>> upstream) {
  const auto out = output_values(g, evaluate(g, w));
  double s = 0.0;
  for (std::size_t i = 0; i < out.size(); ++i) {
    for (std::size_t c = 0; c < out[i].size(); ++c) s += upstream[i][c] * out[i][c];
  }
  return s;
}

inline std::vector<Tensor> finite_diff(const ComputationGraph& g, std::span<const Tensor> weights,
                                       std::span<const std::vector<double>> upstream, double h = 1e-6) {
  std::vector<Tensor> w(weights.begin(), weights.end());
  std::vector<Tensor> grad;
  for (const Tensor& t : w) grad.push_back(Tensor::zeros(t.rows, t.cols));
  for (std::size_t l = 1; l < w.size(); ++l) {
    for (std::size_t i = 0; i < w[l].data.size(); ++i) {
      const double x = w[l].data[i];
      w[l].data[i] = x + h;
      const double up = weighted_outputs(g, w, upstream);
      w[l].data[i] = x - h;
      const double down = weighted_outputs(g, w, upstream);
      w[l].data[i] = x;
      grad[l].data[i] = (up - down) / (2.0 * h);
    }
  }
  return grad;
}

// Largest |a - b| over all components, divided by the largest |b| (at least 1e-3).
inline double gradient_gap(std::span<const Tensor> a, std::span<const Tensor> b) {
  double gap = 0.0, scale = 1e-3;
  for (std::size_t l = 0; l < b.size(); ++l) {
    for (std::size_t i = 0; i < b[l].data.size(); ++i) {
      gap = std::max(gap, std::abs(a[l].data[i] - b[l].data[i]));
      scale = std::max(scale, std::abs(b[l].data[i]));
    }
  }
  return gap / scale;
}

}  // namespace liftcg::testing
