#pragma once

// Computation-graph IR: nodes with activation functions, an ordered list of
// weight-labeled edges, and designated outputs. A node's value is its
// activation applied to the weighted values of its children, taken in
// edge-list order.

#include <cstddef>
#include <cstdint>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "liftcg/tensor.hpp"

namespace liftcg {

using NodeId = std::uint32_t;
using Label = std::uint32_t;

// Label 0 is the fixed identity weight (scalar 1.0) used by unweighted edges.
inline constexpr Label kIdentityLabel = 0;

struct Edge {
  NodeId child;
  NodeId parent;
  Label label;

  bool operator==(const Edge&) const = default;
};

enum class ActivationKind : std::uint8_t {
  Const,
  Identity,
  SigmoidSum,
  TanhSum,
  ReluSum,
  Sum,
  Avg,
  Max,
  MulCos,
};

std::string_view to_string(ActivationKind kind);
std::optional<ActivationKind> parse_activation(std::string_view name);

// Symmetric kinds are invariant under permutation of their weighted
// arguments; the exact compressor and the oracle may then compare children as
// multisets. Every kind of the form f(sum of arguments) qualifies.
bool is_symmetric(ActivationKind kind);

struct Activation {
  ActivationKind kind = ActivationKind::Identity;
  std::vector<double> constant;  // only for Const

  static Activation of(ActivationKind k) { return Activation{k, {}}; }
  static Activation constant_of(std::vector<double> value) { return Activation{ActivationKind::Const, std::move(value)}; }

  bool operator==(const Activation&) const = default;
};

class ComputationGraph {
 public:
  ComputationGraph() = default;

  // Validates and indexes the graph. Throws Error with DanglingEdge,
  // ArityViolation, CycleDetected, UnknownNode or InvalidArgument.
  static ComputationGraph build(std::vector<Activation> nodes, std::vector<Edge> edges, std::vector<NodeId> outputs,
                                std::size_t value_dim);

  std::size_t node_count() const noexcept { return nodes_.size(); }
  std::size_t edge_count() const noexcept { return edges_.size(); }
  std::size_t value_dim() const noexcept { return value_dim_; }

  const Activation& activation(NodeId id) const { return nodes_[id]; }
  std::span<const Activation> activations() const noexcept { return nodes_; }
  std::span<const Edge> edges() const noexcept { return edges_; }
  std::span<const NodeId> outputs() const noexcept { return outputs_; }

  // Indices into edges(), in edge-list order.
  std::span<const std::uint32_t> child_edges(NodeId id) const {
    return {child_index_.data() + child_offset_[id], child_offset_[id + 1] - child_offset_[id]};
  }
  std::span<const std::uint32_t> parent_edges(NodeId id) const {
    return {parent_index_.data() + parent_offset_[id], parent_offset_[id + 1] - parent_offset_[id]};
  }

  // Children before parents; ties broken by ascending id.
  std::span<const NodeId> topological_order() const noexcept { return topo_; }

 private:
  std::vector<Activation> nodes_;
  std::vector<Edge> edges_;
  std::vector<NodeId> outputs_;
  std::size_t value_dim_ = 1;

  std::vector<std::uint32_t> child_offset_;
  std::vector<std::uint32_t> child_index_;
  std::vector<std::uint32_t> parent_offset_;
  std::vector<std::uint32_t> parent_index_;
  std::vector<NodeId> topo_;
};

inline ComputationGraph build_graph(std::vector<Activation> nodes, std::vector<Edge> edges, std::vector<NodeId> outputs,
                                    std::size_t value_dim = 1) {
  return ComputationGraph::build(std::move(nodes), std::move(edges), std::move(outputs), value_dim);
}

// Indexed list of shared weights. Entry 0 is the non-trainable identity.
// Entries may carry a string key so templates can find them again.
class WeightStore {
 public:
  WeightStore();

  std::size_t size() const noexcept { return tensors_.size(); }
  std::span<const Tensor> tensors() const noexcept { return tensors_; }
  const Tensor& operator[](Label l) const { return tensors_.at(l); }
  Tensor& mutable_tensor(Label l);
  bool trainable(Label l) const { return trainable_.at(l); }
  const std::string& key(Label l) const { return keys_.at(l); }

  Label add(Tensor value, bool trainable = true, std::string key = {});
  std::optional<Label> find(std::string_view key) const;

  // Returns the label for `key`, allocating a rows x cols tensor initialized
  // uniformly on [-1, 1] from (seed, key) when absent. Allocation depends on
  // the key alone, never on call order.
  Label ensure(const std::string& key, std::size_t rows, std::size_t cols, std::uint64_t seed);

  // A sealed store refuses new keys in ensure().
  void seal() noexcept { sealed_ = true; }
  bool sealed() const noexcept { return sealed_; }

  bool operator==(const WeightStore& o) const {
    return tensors_ == o.tensors_ && trainable_ == o.trainable_ && keys_ == o.keys_;
  }

 private:
  std::vector<Tensor> tensors_;
  std::vector<bool> trainable_;
  std::vector<std::string> keys_;
  std::map<std::string, Label, std::less<>> index_;
  bool sealed_ = false;
};

// Per-node values stored contiguously. Node dims may differ (e.g. a scalar
// output projected from d-dimensional states).
class NodeValues {
 public:
  std::span<const double> operator[](NodeId id) const { return {data_.data() + offset_[id], dim_[id]}; }
  std::size_t dim(NodeId id) const { return dim_[id]; }
  std::size_t node_count() const noexcept { return offset_.size(); }

 private:
  friend NodeValues make_node_values(std::vector<std::size_t> offset, std::vector<std::uint32_t> dim,
                                     std::vector<double> data);
  std::vector<std::size_t> offset_;
  std::vector<std::uint32_t> dim_;
  std::vector<double> data_;
};

NodeValues make_node_values(std::vector<std::size_t> offset, std::vector<std::uint32_t> dim, std::vector<double> data);

// value(N) for every node, in one pass over the topological order.
// Throws WeightIndexOutOfRange or DimensionMismatch.
NodeValues evaluate(const ComputationGraph& g, std::span<const Tensor> weights);
inline NodeValues evaluate(const ComputationGraph& g, const WeightStore& w) { return evaluate(g, w.tensors()); }

// Values of the output slots, concatenated per slot.
std::vector<std::vector<double>> output_values(const ComputationGraph& g, const NodeValues& values);

// Weighted argument k of a node (W_L * value(child)) into `out`.
void weighted_argument(const Tensor& weight, std::span<const double> child_value, std::span<double> out);

// Longest path from any leaf; leaves have height 0.
std::vector<std::uint32_t> node_heights(const ComputationGraph& g);

}  // namespace liftcg
