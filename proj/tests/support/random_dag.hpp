#pragma once

// Random layered computation graphs with planted repeated structure, for
// property tests.

#include <algorithm>
#include <vector>

#include "liftcg/graph.hpp"
#include "liftcg/random.hpp"

namespace liftcg::testing {

struct DagSpec {
  std::size_t max_nodes = 500;
  std::size_t layers = 7;
  std::size_t labels = 6;  // trainable labels; 0 is the identity
  std::size_t value_dim = 1;
  double clone_rate = 0.35;  // chance a node copies an earlier node's inputs
  bool allow_max = true;
};

struct RandomDag {
  ComputationGraph graph;
  std::vector<Tensor> weights;
};

inline std::vector<Tensor> random_weights(std::size_t labels, std::size_t d, Rng& rng) {
  std::vector<Tensor> w{Tensor::scalar(1.0)};
  for (std::size_t l = 1; l <= labels; ++l) {
    // Mix scales and square matrices so both weight forms are exercised.
    Tensor t = (d > 1 && l % 2 == 0) ? Tensor::zeros(d, d) : Tensor::scalar(0.0);
    for (double& x : t.data) x = rng.uniform(-1.0, 1.0);
    w.push_back(std::move(t));
  }
  return w;
}

inline RandomDag random_dag(std::uint64_t seed, const DagSpec& spec = {}) {
  Rng rng(splitmix64(seed));
  const std::size_t d = spec.value_dim;
  const std::size_t n = 8 + rng.below(spec.max_nodes - 7);

  std::vector<Activation> nodes;
  std::vector<Edge> edges;
  std::vector<std::vector<NodeId>> by_layer(spec.layers + 1);
  std::vector<std::vector<Edge>> inputs;  // per node, for cloning

  // A handful of distinct constants, reused so leaves repeat.
  std::vector<std::vector<double>> consts;
  for (int c = 0; c < 3; ++c) {
    std::vector<double> v(d);
    for (double& x : v) x = rng.uniform(-1.0, 1.0);
    consts.push_back(std::move(v));
  }
  const std::size_t leaves = 2 + rng.below(4);
  for (std::size_t i = 0; i < leaves; ++i) {
    nodes.push_back(Activation::constant_of(consts[rng.below(consts.size())]));
    by_layer[0].push_back(static_cast<NodeId>(nodes.size() - 1));
    inputs.emplace_back();
  }

  const ActivationKind kinds[] = {ActivationKind::SigmoidSum, ActivationKind::TanhSum, ActivationKind::ReluSum,
                                  ActivationKind::Sum,        ActivationKind::Avg,     ActivationKind::Max,
                                  ActivationKind::Identity,   ActivationKind::MulCos};
  auto pick_label = [&] { return static_cast<Label>(rng.below(spec.labels + 1)); };

  while (nodes.size() < n) {
    const std::size_t layer = 1 + rng.below(spec.layers);
    const NodeId id = static_cast<NodeId>(nodes.size());
    std::vector<NodeId> pool;
    for (std::size_t l = 0; l < layer; ++l) pool.insert(pool.end(), by_layer[l].begin(), by_layer[l].end());
    if (pool.empty()) continue;

    // Clone an earlier non-leaf node's activation and argument list, possibly
    // permuting arguments of symmetric kinds.
    if (id > leaves && rng.uniform(0.0, 1.0) < spec.clone_rate) {
      const NodeId src = static_cast<NodeId>(leaves + rng.below(id - leaves));
      std::size_t src_layer = 0;
      for (std::size_t l = 0; l <= spec.layers; ++l) {
        if (std::find(by_layer[l].begin(), by_layer[l].end(), src) != by_layer[l].end()) src_layer = l;
      }
      std::vector<Edge> in = inputs[src];
      if (is_symmetric(nodes[src].kind)) seeded_shuffle(in.begin(), in.end(), rng);
      nodes.push_back(nodes[src]);
      for (Edge& e : in) {
        e.parent = id;
        edges.push_back(e);
      }
      inputs.push_back(in);
      by_layer[src_layer].push_back(id);
      continue;
    }

    ActivationKind kind = kinds[rng.below(std::size(kinds))];
    if (kind == ActivationKind::Max && !spec.allow_max) kind = ActivationKind::Avg;
    std::size_t k = kind == ActivationKind::Identity ? 1 : kind == ActivationKind::MulCos ? 2 : 1 + rng.below(4);
    std::vector<Edge> in;
    for (std::size_t j = 0; j < k; ++j) {
      const NodeId child = pool[rng.below(pool.size())];
      in.push_back(Edge{child, id, pick_label()});
      // Occasionally repeat an argument, as in Example 1's duplicated edge.
      if (j + 1 < k && rng.below(6) == 0) {
        in.push_back(in.back());
        ++j;
      }
    }
    nodes.push_back(Activation::of(kind));
    edges.insert(edges.end(), in.begin(), in.end());
    inputs.push_back(std::move(in));
    by_layer[layer].push_back(id);
  }

  // Outputs: every node without parents, plus a few random internal nodes.
  std::vector<bool> has_parent(nodes.size(), false);
  for (const Edge& e : edges) has_parent[e.child] = true;
  std::vector<NodeId> outputs;
  for (NodeId i = 0; i < nodes.size(); ++i) {
    if (!has_parent[i] && nodes[i].kind != ActivationKind::Const) outputs.push_back(i);
  }
  for (int i = 0; i < 3; ++i) outputs.push_back(static_cast<NodeId>(leaves + rng.below(nodes.size() - leaves)));

  RandomDag out;
  out.graph = ComputationGraph::build(std::move(nodes), std::move(edges), std::move(outputs), d);
  out.weights = random_weights(spec.labels, d, rng);
  return out;
}

}  // namespace liftcg::testing
