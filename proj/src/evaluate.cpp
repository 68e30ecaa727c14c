#include <cmath>
#include <string>

#include "activation_internal.hpp"
#include "liftcg/error.hpp"
#include "liftcg/graph.hpp"
#include "liftcg/simd/kernels.hpp"

namespace liftcg {

void weighted_argument(const Tensor& weight, std::span<const double> child_value, std::span<double> out) {
  const auto& k = simd::active_kernels();
  if (weight.is_scalar()) {
    k.scale(weight.data[0], child_value.data(), out.data(), child_value.size());
  } else {
    k.gemv(weight.data.data(), weight.rows, weight.cols, child_value.data(), out.data());
  }
}

NodeValues evaluate(const ComputationGraph& g, std::span<const Tensor> weights) {
  const auto& kern = simd::active_kernels();
  const std::size_t n = g.node_count();
  std::vector<std::size_t> offset(n, 0);
  std::vector<std::uint32_t> dim(n, 0);
  std::vector<double> data;
  data.reserve(n * g.value_dim());

  std::vector<double> args;
  std::vector<double> scratch;
  const auto edges = g.edges();

  for (NodeId id : g.topological_order()) {
    const Activation& act = g.activation(id);
    if (act.kind == ActivationKind::Const) {
      offset[id] = data.size();
      dim[id] = static_cast<std::uint32_t>(act.constant.size());
      data.insert(data.end(), act.constant.begin(), act.constant.end());
      continue;
    }

    const auto children = g.child_edges(id);
    std::size_t arg_dim = 0;
    for (std::size_t j = 0; j < children.size(); ++j) {
      const Edge& e = edges[children[j]];
      if (e.label >= weights.size()) {
        throw Error(ErrorCode::WeightIndexOutOfRange, "label " + std::to_string(e.label) + " has no weight",
                    "edge " + std::to_string(children[j]));
      }
      const Tensor& w = weights[e.label];
      std::size_t d = dim[e.child];
      if (!w.is_scalar()) {
        if (w.cols != d) {
          throw Error(ErrorCode::DimensionMismatch,
                      "weight " + std::to_string(e.label) + " expects " + std::to_string(w.cols) +
                          " inputs, child has " + std::to_string(d),
                      "edge " + std::to_string(children[j]));
        }
        d = w.rows;
      }
      if (j == 0) {
        arg_dim = d;
      } else if (d != arg_dim) {
        throw Error(ErrorCode::DimensionMismatch, "weighted arguments differ in length", "node " + std::to_string(id));
      }
    }

    const std::size_t k = children.size();
    args.resize(k * arg_dim);
    for (std::size_t j = 0; j < k; ++j) {
      const Edge& e = edges[children[j]];
      const Tensor& w = weights[e.label];
      const double* x = data.data() + offset[e.child];
      double* y = args.data() + j * arg_dim;
      if (w.is_scalar()) {
        kern.scale(w.data[0], x, y, dim[e.child]);
      } else {
        kern.gemv(w.data.data(), w.rows, w.cols, x, y);
      }
    }

    offset[id] = data.size();
    dim[id] = static_cast<std::uint32_t>(arg_dim);
    data.resize(data.size() + arg_dim);
    double* out = data.data() + offset[id];

    switch (act.kind) {
      case ActivationKind::Identity:
        std::copy(args.begin(), args.begin() + static_cast<std::ptrdiff_t>(arg_dim), out);
        break;
      case ActivationKind::MulCos:
        for (std::size_t i = 0; i < arg_dim; ++i) out[i] = args[i] * std::cos(args[arg_dim + i]);
        break;
      case ActivationKind::Max:
        std::copy(args.begin(), args.begin() + static_cast<std::ptrdiff_t>(arg_dim), out);
        for (std::size_t j = 1; j < k; ++j) kern.max_acc(args.data() + j * arg_dim, out, arg_dim);
        break;
      default:
        detail::pooled_sum(args.data(), k, arg_dim, out, scratch);
        detail::apply_pooled(act.kind, k, out, arg_dim);
        break;
    }
  }
  return make_node_values(std::move(offset), std::move(dim), std::move(data));
}

}  // namespace liftcg
