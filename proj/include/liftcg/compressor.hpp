#pragma once

// Lossless compression of computation graphs by merging equivalent nodes.
//
// Both algorithms first evaluate the graph under n random weight lists and
// key every node by its quantized values (the fingerprint).
//
//  * compress_nonexact walks breadth-first from the outputs and merges every
//    node into the first-visited node carrying the same key. Nodes that only
//    agree by chance get merged too; lowering `digits` makes that likelier.
//  * compress_exact walks children-first and merges a node into an already
//    processed node with the same key only when both have the same activation
//    and the same (representative child, label) list, compared as a multiset
//    for symmetric activations (as a set for MAX, and up to a common
//    multiplicity factor for AVG). The result computes the same function for
//    every weight list.
//
// Keys are bucketed by (activation kind, value length, height) before they
// are compared. Equal-height merging keeps the rewritten graph acyclic.

#include <chrono>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "liftcg/graph.hpp"
#include "liftcg/random.hpp"

namespace liftcg {

struct FingerprintParams {
  int inits = 1;       // n >= 1 random weight lists
  int digits = 12;     // 1..17 significant digits
  std::uint64_t seed = 0;
};

struct FingerprintTable {
  FingerprintParams params;
  std::vector<std::string> keys;     // per node
  std::vector<std::uint32_t> dims;   // per node value length
};

// Decimal scientific notation with `digits` significant digits, rounded half
// away from zero. Zero, negative zero and |v| < 1e-300 all map to "0".
std::string quantize(double v, int digits);

// Random weight list shaped like `shapes`: every component uniform on
// [-1, 1], label 0 kept at the identity.
std::vector<Tensor> sample_weights(std::span<const Tensor> shapes, Rng& rng);

// Throws InvalidArgument for inits < 1 or digits outside 1..17.
FingerprintTable fingerprint(const ComputationGraph& g, std::span<const Tensor> shapes, const FingerprintParams& params);

enum class Algorithm { NonExact, Exact };

std::string_view to_string(Algorithm a);

struct CompressionReport {
  Algorithm algorithm = Algorithm::Exact;
  FingerprintParams params;
  std::size_t nodes_before = 0;
  std::size_t nodes_after = 0;
  std::size_t edges_before = 0;
  std::size_t edges_after = 0;
  // Original node -> its representative (an original id). Idempotent.
  std::vector<NodeId> merge_map;
  // Original node -> id in the compressed graph, for representatives that
  // survived pruning.
  std::vector<std::optional<NodeId>> compressed_id;
  std::chrono::duration<double> wall_time{0};

  std::size_t merges() const;
};

struct Compressed {
  ComputationGraph graph;
  CompressionReport report;
};

Compressed compress_nonexact(const ComputationGraph& g, std::span<const Tensor> shapes, const FingerprintParams& params);
Compressed compress_exact(const ComputationGraph& g, std::span<const Tensor> shapes, const FingerprintParams& params);

inline Compressed compress_nonexact(const ComputationGraph& g, const WeightStore& w, const FingerprintParams& p) {
  return compress_nonexact(g, w.tensors(), p);
}
inline Compressed compress_exact(const ComputationGraph& g, const WeightStore& w, const FingerprintParams& p) {
  return compress_exact(g, w.tensors(), p);
}

struct Pruned {
  ComputationGraph graph;
  // Old id -> new id; nullopt for removed nodes. Survivors keep their relative order.
  std::vector<std::optional<NodeId>> renumbering;
};

// Drops nodes from which no output is reachable.
Pruned prune_unreachable(const ComputationGraph& g);

// Redirects every edge to the representative of its child, drops the edges of
// merged-away parents, points output slots at representatives and prunes.
// `merge_map` must be idempotent and must not create cycles.
Pruned apply_merges(const ComputationGraph& g, std::span<const NodeId> merge_map);

// Resolves nodes of an original graph to nodes of a compressed one.
class NodeMapping {
 public:
  NodeMapping() = default;
  explicit NodeMapping(std::vector<std::optional<NodeId>> to_compressed) : to_compressed_(std::move(to_compressed)) {}
  static NodeMapping from_report(const CompressionReport& report);
  static NodeMapping identity(std::size_t n);

  // Throws UnknownNode when `original` is out of range or was pruned.
  NodeId resolve(NodeId original) const;
  std::size_t size() const noexcept { return to_compressed_.size(); }

  // first maps A -> B, second maps B -> C; the result maps A -> C.
  static NodeMapping compose(const NodeMapping& first, const NodeMapping& second);

 private:
  std::vector<std::optional<NodeId>> to_compressed_;
};

// Reads per-node data of the original graph off the compressed graph.
// Throws UnknownNode if any original node has no counterpart.
std::vector<std::vector<double>> apply_merge_map(const NodeMapping& mapping, const NodeValues& compressed_values);

// Partition of the original nodes as class ids: nodes share an id iff they
// share a representative. Ids are the smallest member of each class, so
// partitions from different algorithms compare with ==.
std::vector<NodeId> partition_of(const CompressionReport& report);

std::string report_to_json(const CompressionReport& report);

}  // namespace liftcg
