#pragma once

#include <string>
#include <string_view>

#include "liftcg/graph.hpp"

namespace liftcg {

// A graph together with the weights its labels refer to.
struct GraphBundle {
  ComputationGraph graph;
  WeightStore weights;
};

// JSON document with fields value_dim, nodes, edges, outputs, weights.
// Edge and output order, duplicate edges and trainable flags are preserved
// and doubles round-trip exactly.
std::string serialize(const ComputationGraph& g, const WeightStore& w);

// Throws Error(MalformedInput) naming the byte offset or JSON path at fault;
// graph validation errors (cycles, arity) propagate unchanged.
GraphBundle deserialize(std::string_view text);

GraphBundle read_bundle(const std::string& path);
void write_bundle(const std::string& path, const ComputationGraph& g, const WeightStore& w);

}  // namespace liftcg
