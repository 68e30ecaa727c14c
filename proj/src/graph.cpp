#include "liftcg/graph.hpp"

#include <algorithm>
#include <array>
#include <functional>
#include <queue>

#include "liftcg/error.hpp"
#include "liftcg/random.hpp"

namespace liftcg {

std::string_view to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::CycleDetected: return "CycleDetected";
    case ErrorCode::ArityViolation: return "ArityViolation";
    case ErrorCode::DanglingEdge: return "DanglingEdge";
    case ErrorCode::DimensionMismatch: return "DimensionMismatch";
    case ErrorCode::WeightIndexOutOfRange: return "WeightIndexOutOfRange";
    case ErrorCode::MalformedInput: return "MalformedInput";
    case ErrorCode::EmptySample: return "EmptySample";
    case ErrorCode::UnknownEdgeType: return "UnknownEdgeType";
    case ErrorCode::EmptyKB: return "EmptyKB";
    case ErrorCode::UnknownNode: return "UnknownNode";
    case ErrorCode::ParseError: return "ParseError";
    case ErrorCode::DimMismatch: return "DimMismatch";
    case ErrorCode::TooFewSamples: return "TooFewSamples";
    case ErrorCode::InvalidArgument: return "InvalidArgument";
  }
  return "Unknown";
}

namespace {

constexpr std::array<std::pair<ActivationKind, std::string_view>, 9> kActivationNames{{
    {ActivationKind::Const, "CONST"},
    {ActivationKind::Identity, "IDENTITY"},
    {ActivationKind::SigmoidSum, "SIGMOID_SUM"},
    {ActivationKind::TanhSum, "TANH_SUM"},
    {ActivationKind::ReluSum, "RELU_SUM"},
    {ActivationKind::Sum, "SUM"},
    {ActivationKind::Avg, "AVG"},
    {ActivationKind::Max, "MAX"},
    {ActivationKind::MulCos, "MUL_COS"},
}};

void check_arity(NodeId id, const Activation& a, std::size_t children) {
  const std::string where = "node " + std::to_string(id);
  switch (a.kind) {
    case ActivationKind::Const:
      if (children != 0) throw Error(ErrorCode::ArityViolation, "CONST node must have no children", where);
      if (a.constant.empty()) throw Error(ErrorCode::ArityViolation, "CONST node has an empty constant", where);
      return;
    case ActivationKind::Identity:
      if (children != 1) throw Error(ErrorCode::ArityViolation, "IDENTITY node needs exactly 1 child", where);
      return;
    case ActivationKind::MulCos:
      if (children != 2) throw Error(ErrorCode::ArityViolation, "MUL_COS node needs exactly 2 children", where);
      return;
    default:
      if (children == 0) throw Error(ErrorCode::ArityViolation, "non-CONST node has no children", where);
      return;
  }
}

}  // namespace

std::string_view to_string(ActivationKind kind) {
  for (const auto& [k, name] : kActivationNames) {
    if (k == kind) return name;
  }
  return "?";
}

std::optional<ActivationKind> parse_activation(std::string_view name) {
  for (const auto& [k, n] : kActivationNames) {
    if (n == name) return k;
  }
  return std::nullopt;
}

bool is_symmetric(ActivationKind kind) {
  switch (kind) {
    case ActivationKind::SigmoidSum:
    case ActivationKind::TanhSum:
    case ActivationKind::ReluSum:
    case ActivationKind::Sum:
    case ActivationKind::Avg:
    case ActivationKind::Max:
      return true;
    default:
      return false;
  }
}

ComputationGraph ComputationGraph::build(std::vector<Activation> nodes, std::vector<Edge> edges,
                                         std::vector<NodeId> outputs, std::size_t value_dim) {
  if (value_dim == 0) throw Error(ErrorCode::InvalidArgument, "value_dim must be positive");
  const std::size_t n = nodes.size();

  for (std::size_t i = 0; i < edges.size(); ++i) {
    const Edge& e = edges[i];
    if (e.child >= n || e.parent >= n) {
      throw Error(ErrorCode::DanglingEdge, "edge endpoint out of range", "edge " + std::to_string(i));
    }
    if (e.child == e.parent) throw Error(ErrorCode::CycleDetected, "self loop", "edge " + std::to_string(i));
  }
  for (NodeId o : outputs) {
    if (o >= n) throw Error(ErrorCode::UnknownNode, "output does not exist", "node " + std::to_string(o));
  }

  ComputationGraph g;
  g.value_dim_ = value_dim;

  // CSR adjacency, stable in edge-list order.
  g.child_offset_.assign(n + 1, 0);
  g.parent_offset_.assign(n + 1, 0);
  for (const Edge& e : edges) {
    ++g.child_offset_[e.parent + 1];
    ++g.parent_offset_[e.child + 1];
  }
  for (std::size_t i = 0; i < n; ++i) {
    g.child_offset_[i + 1] += g.child_offset_[i];
    g.parent_offset_[i + 1] += g.parent_offset_[i];
  }
  g.child_index_.resize(edges.size());
  g.parent_index_.resize(edges.size());
  {
    std::vector<std::uint32_t> cfill(g.child_offset_.begin(), g.child_offset_.end() - 1);
    std::vector<std::uint32_t> pfill(g.parent_offset_.begin(), g.parent_offset_.end() - 1);
    for (std::uint32_t i = 0; i < edges.size(); ++i) {
      g.child_index_[cfill[edges[i].parent]++] = i;
      g.parent_index_[pfill[edges[i].child]++] = i;
    }
  }

  for (NodeId id = 0; id < n; ++id) check_arity(id, nodes[id], g.child_offset_[id + 1] - g.child_offset_[id]);

  // Kahn's algorithm; a min-heap keeps the order independent of container details.
  std::vector<std::uint32_t> pending(n);
  std::priority_queue<NodeId, std::vector<NodeId>, std::greater<>> ready;
  for (NodeId id = 0; id < n; ++id) {
    pending[id] = g.child_offset_[id + 1] - g.child_offset_[id];
    if (pending[id] == 0) ready.push(id);
  }
  g.topo_.reserve(n);
  while (!ready.empty()) {
    const NodeId id = ready.top();
    ready.pop();
    g.topo_.push_back(id);
    for (std::uint32_t k = g.parent_offset_[id]; k < g.parent_offset_[id + 1]; ++k) {
      const NodeId p = edges[g.parent_index_[k]].parent;
      if (--pending[p] == 0) ready.push(p);
    }
  }
  if (g.topo_.size() != n) {
    NodeId culprit = 0;
    for (NodeId id = 0; id < n; ++id) {
      if (pending[id] != 0) {
        culprit = id;
        break;
      }
    }
    throw Error(ErrorCode::CycleDetected, "graph has a cycle", "node " + std::to_string(culprit));
  }

  g.nodes_ = std::move(nodes);
  g.edges_ = std::move(edges);
  g.outputs_ = std::move(outputs);
  return g;
}

WeightStore::WeightStore() { add(Tensor::scalar(1.0), false, "identity"); }

Tensor& WeightStore::mutable_tensor(Label l) {
  if (l == kIdentityLabel) throw Error(ErrorCode::InvalidArgument, "the identity weight is immutable");
  return tensors_.at(l);
}

Label WeightStore::add(Tensor value, bool trainable, std::string key) {
  const auto label = static_cast<Label>(tensors_.size());
  if (!key.empty()) {
    if (index_.contains(key)) throw Error(ErrorCode::InvalidArgument, "duplicate weight key", key);
    index_.emplace(key, label);
  }
  tensors_.push_back(std::move(value));
  trainable_.push_back(trainable);
  keys_.push_back(std::move(key));
  return label;
}

std::optional<Label> WeightStore::find(std::string_view key) const {
  if (auto it = index_.find(key); it != index_.end()) return it->second;
  return std::nullopt;
}

Label WeightStore::ensure(const std::string& key, std::size_t rows, std::size_t cols, std::uint64_t seed) {
  if (auto existing = find(key)) {
    const Tensor& t = tensors_[*existing];
    if (t.rows != rows || t.cols != cols) throw Error(ErrorCode::DimensionMismatch, "weight shape differs", key);
    return *existing;
  }
  if (sealed_) throw Error(ErrorCode::InvalidArgument, "store is sealed and has no weight", key);
  Rng rng(stable_hash(key, seed));
  Tensor t = Tensor::zeros(rows, cols);
  for (double& x : t.data) x = rng.uniform(-1.0, 1.0);
  return add(std::move(t), true, key);
}

NodeValues make_node_values(std::vector<std::size_t> offset, std::vector<std::uint32_t> dim, std::vector<double> data) {
  NodeValues v;
  v.offset_ = std::move(offset);
  v.dim_ = std::move(dim);
  v.data_ = std::move(data);
  return v;
}

std::vector<std::vector<double>> output_values(const ComputationGraph& g, const NodeValues& values) {
  std::vector<std::vector<double>> out;
  out.reserve(g.outputs().size());
  for (NodeId o : g.outputs()) {
    auto v = values[o];
    out.emplace_back(v.begin(), v.end());
  }
  return out;
}

std::vector<std::uint32_t> node_heights(const ComputationGraph& g) {
  std::vector<std::uint32_t> h(g.node_count(), 0);
  for (NodeId id : g.topological_order()) {
    for (std::uint32_t e : g.child_edges(id)) h[id] = std::max(h[id], h[g.edges()[e].child] + 1);
  }
  return h;
}

}  // namespace liftcg
