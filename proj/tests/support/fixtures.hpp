#pragma once

#include <string>
#include <vector>

#include "liftcg/graph.hpp"

namespace liftcg::testing {

#ifndef LIFTCG_SOURCE_DIR
#define LIFTCG_SOURCE_DIR "."
#endif

inline std::string asset(const std::string& name) { return std::string(LIFTCG_SOURCE_DIR) + "/assets/" + name; }
inline std::string golden(const std::string& name) {
  return std::string(LIFTCG_SOURCE_DIR) + "/tests/golden/" + name;
}

// Example 1, ids shifted to start at 0:
//   0 CONST(1), 1 IDENTITY, 2 IDENTITY, 3 MUL_COS
//   edges (0,1,1) (0,2,1) (1,3,2) (2,3,2), output 3
inline ComputationGraph example1() {
  return build_graph({Activation::constant_of({1.0}), Activation::of(ActivationKind::Identity),
                      Activation::of(ActivationKind::Identity), Activation::of(ActivationKind::MulCos)},
                     {{0, 1, 1}, {0, 2, 1}, {1, 3, 2}, {2, 3, 2}}, {3});
}

inline std::vector<Tensor> scalar_weights(std::vector<double> w) {
  std::vector<Tensor> out{Tensor::scalar(1.0)};
  for (double x : w) out.push_back(Tensor::scalar(x));
  return out;
}

// K_{1,k} as a bare computation graph: k equal CONST leaves, each through an
// IDENTITY with label 1, pooled by `pool` at the center.
inline ComputationGraph star_graph(std::size_t k, ActivationKind pool = ActivationKind::Avg) {
  std::vector<Activation> nodes;
  std::vector<Edge> edges;
  nodes.push_back(Activation::of(pool));
  for (std::size_t i = 0; i < k; ++i) {
    const NodeId leaf = static_cast<NodeId>(nodes.size());
    nodes.push_back(Activation::constant_of({0.5}));
    const NodeId id = static_cast<NodeId>(nodes.size());
    nodes.push_back(Activation::of(ActivationKind::SigmoidSum));
    edges.push_back({leaf, id, 1});
    edges.push_back({id, 0, 2});
  }
  return build_graph(std::move(nodes), std::move(edges), {0});
}

// CONST -> IDENTITY -> IDENTITY ... with distinct labels: nothing merges.
inline ComputationGraph chain(std::size_t length) {
  std::vector<Activation> nodes{Activation::constant_of({0.25})};
  std::vector<Edge> edges;
  for (std::size_t i = 1; i <= length; ++i) {
    nodes.push_back(Activation::of(ActivationKind::TanhSum));
    edges.push_back({static_cast<NodeId>(i - 1), static_cast<NodeId>(i), static_cast<Label>(i)});
  }
  return build_graph(std::move(nodes), std::move(edges), {static_cast<NodeId>(length)});
}

}  // namespace liftcg::testing
