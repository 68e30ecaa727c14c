#include "liftcg/compressor.hpp"

#include <algorithm>
#include <numeric>
#include <cstring>
#include <unordered_map>
#include <utility>

#include <json.hpp>

#include "liftcg/error.hpp"

namespace liftcg {

namespace {

using Clock = std::chrono::steady_clock;

std::string bucket_key(const ComputationGraph& g, const FingerprintTable& fp, const std::vector<std::uint32_t>& height,
                       NodeId id) {
  std::string k;
  k.reserve(fp.keys[id].size() + 16);
  k += std::to_string(static_cast<int>(g.activation(id).kind));
  k.push_back('|');
  k += std::to_string(fp.dims[id]);
  k.push_back('|');
  k += std::to_string(height[id]);
  k.push_back('|');
  k += fp.keys[id];
  return k;
}

bool same_constant(const std::vector<double>& a, const std::vector<double>& b) {
  return a.size() == b.size() && (a.empty() || std::memcmp(a.data(), b.data(), a.size() * sizeof(double)) == 0);
}

// MAX is idempotent, so its children compare as a set. AVG only depends on
// the proportions of its arguments: AVG(x, x, y, y) = AVG(x, y). Both rules
// catch equivalences that a plain multiset comparison misses, e.g. the
// aggregate of a node with two identical neighbors versus one.
void normalize_pooled(ActivationKind kind, std::vector<std::pair<NodeId, Label>>& sig) {
  if (kind == ActivationKind::Max) {
    sig.erase(std::unique(sig.begin(), sig.end()), sig.end());
  } else if (kind == ActivationKind::Avg && sig.size() > 1) {
    std::vector<std::pair<std::pair<NodeId, Label>, std::size_t>> runs;
    for (const auto& arg : sig) {
      if (runs.empty() || runs.back().first != arg) runs.push_back({arg, 0});
      ++runs.back().second;
    }
    std::size_t g = 0;
    for (const auto& r : runs) g = std::gcd(g, r.second);
    if (g <= 1) return;
    sig.clear();
    for (const auto& r : runs) sig.insert(sig.end(), r.second / g, r.first);
  }
}

Compressed finish(const ComputationGraph& g, Algorithm algorithm, const FingerprintParams& params,
                  std::vector<NodeId> merge_map, Clock::time_point start) {
  Pruned pruned = apply_merges(g, merge_map);
  Compressed out;
  out.report.algorithm = algorithm;
  out.report.params = params;
  out.report.nodes_before = g.node_count();
  out.report.edges_before = g.edge_count();
  out.report.nodes_after = pruned.graph.node_count();
  out.report.edges_after = pruned.graph.edge_count();
  out.report.merge_map = std::move(merge_map);
  out.report.compressed_id = std::move(pruned.renumbering);
  out.graph = std::move(pruned.graph);
  out.report.wall_time = Clock::now() - start;
  return out;
}

}  // namespace

std::string_view to_string(Algorithm a) { return a == Algorithm::Exact ? "EXACT" : "NONEXACT"; }

std::size_t CompressionReport::merges() const {
  std::size_t n = 0;
  for (NodeId i = 0; i < merge_map.size(); ++i) n += merge_map[i] != i;
  return n;
}

Compressed compress_nonexact(const ComputationGraph& g, std::span<const Tensor> shapes, const FingerprintParams& params) {
  const auto start = Clock::now();
  const FingerprintTable fp = fingerprint(g, shapes, params);
  const auto height = node_heights(g);
  const std::size_t n = g.node_count();

  std::vector<NodeId> merge_map(n);
  for (NodeId i = 0; i < n; ++i) merge_map[i] = i;

  std::unordered_map<std::string, NodeId> first_seen;
  std::vector<bool> visited(n, false);
  std::vector<NodeId> frontier;
  for (NodeId o : g.outputs()) {
    if (!visited[o]) {
      visited[o] = true;
      frontier.push_back(o);
    }
  }
  std::sort(frontier.begin(), frontier.end());

  std::vector<NodeId> next;
  while (!frontier.empty()) {
    for (NodeId id : frontier) {
      auto [it, inserted] = first_seen.try_emplace(bucket_key(g, fp, height, id), id);
      if (!inserted) merge_map[id] = it->second;
    }
    next.clear();
    for (NodeId id : frontier) {
      for (std::uint32_t e : g.child_edges(id)) {
        const NodeId c = g.edges()[e].child;
        if (!visited[c]) {
          visited[c] = true;
          next.push_back(c);
        }
      }
    }
    std::sort(next.begin(), next.end());
    frontier.swap(next);
  }
  return finish(g, Algorithm::NonExact, params, std::move(merge_map), start);
}

Compressed compress_exact(const ComputationGraph& g, std::span<const Tensor> shapes, const FingerprintParams& params) {
  const auto start = Clock::now();
  const FingerprintTable fp = fingerprint(g, shapes, params);
  const auto height = node_heights(g);
  const std::size_t n = g.node_count();

  std::vector<NodeId> merge_map(n);
  for (NodeId i = 0; i < n; ++i) merge_map[i] = i;

  using Signature = std::vector<std::pair<NodeId, Label>>;
  struct Candidate {
    NodeId node;
    Signature signature;
  };
  std::unordered_map<std::string, std::vector<Candidate>> index;

  Signature sig;
  for (NodeId id : g.topological_order()) {
    const Activation& act = g.activation(id);
    sig.clear();
    for (std::uint32_t e : g.child_edges(id)) {
      const Edge& edge = g.edges()[e];
      // Children come earlier in the order, so their representatives are final.
      sig.emplace_back(merge_map[edge.child], edge.label);
    }
    if (is_symmetric(act.kind)) {
      std::sort(sig.begin(), sig.end());
      normalize_pooled(act.kind, sig);
    }

    auto& bucket = index[bucket_key(g, fp, height, id)];
    bool merged = false;
    for (const Candidate& cand : bucket) {
      const Activation& other = g.activation(cand.node);
      if (other.kind != act.kind) continue;
      if (act.kind == ActivationKind::Const && !same_constant(act.constant, other.constant)) continue;
      if (cand.signature != sig) continue;
      merge_map[id] = cand.node;
      merged = true;
      break;
    }
    if (!merged) bucket.push_back(Candidate{id, sig});
  }
  return finish(g, Algorithm::Exact, params, std::move(merge_map), start);
}

Pruned prune_unreachable(const ComputationGraph& g) {
  std::vector<NodeId> identity(g.node_count());
  for (NodeId i = 0; i < identity.size(); ++i) identity[i] = i;
  return apply_merges(g, identity);
}

Pruned apply_merges(const ComputationGraph& g, std::span<const NodeId> merge_map) {
  const std::size_t n = g.node_count();
  if (merge_map.size() != n) throw Error(ErrorCode::InvalidArgument, "merge map size differs from node count");
  const auto edges = g.edges();

  std::vector<bool> reachable(n, false);
  std::vector<NodeId> stack;
  for (NodeId o : g.outputs()) {
    const NodeId r = merge_map[o];
    if (!reachable[r]) {
      reachable[r] = true;
      stack.push_back(r);
    }
  }
  while (!stack.empty()) {
    const NodeId p = stack.back();
    stack.pop_back();
    for (std::uint32_t e : g.child_edges(p)) {
      const NodeId c = merge_map[edges[e].child];
      if (!reachable[c]) {
        reachable[c] = true;
        stack.push_back(c);
      }
    }
  }

  Pruned out;
  out.renumbering.assign(n, std::nullopt);
  std::vector<Activation> nodes;
  for (NodeId i = 0; i < n; ++i) {
    if (reachable[i]) {
      out.renumbering[i] = static_cast<NodeId>(nodes.size());
      nodes.push_back(g.activation(i));
    }
  }
  std::vector<Edge> new_edges;
  for (const Edge& e : edges) {
    if (!reachable[e.parent] || merge_map[e.parent] != e.parent) continue;
    new_edges.push_back(Edge{*out.renumbering[merge_map[e.child]], *out.renumbering[e.parent], e.label});
  }
  std::vector<NodeId> outputs;
  outputs.reserve(g.outputs().size());
  for (NodeId o : g.outputs()) outputs.push_back(*out.renumbering[merge_map[o]]);

  out.graph = ComputationGraph::build(std::move(nodes), std::move(new_edges), std::move(outputs), g.value_dim());
  return out;
}

NodeMapping NodeMapping::from_report(const CompressionReport& report) {
  std::vector<std::optional<NodeId>> m(report.merge_map.size());
  for (NodeId i = 0; i < m.size(); ++i) m[i] = report.compressed_id[report.merge_map[i]];
  return NodeMapping(std::move(m));
}

NodeMapping NodeMapping::identity(std::size_t n) {
  std::vector<std::optional<NodeId>> m(n);
  for (NodeId i = 0; i < n; ++i) m[i] = i;
  return NodeMapping(std::move(m));
}

NodeId NodeMapping::resolve(NodeId original) const {
  if (original >= to_compressed_.size() || !to_compressed_[original]) {
    throw Error(ErrorCode::UnknownNode, "node has no counterpart in the compressed graph",
                "node " + std::to_string(original));
  }
  return *to_compressed_[original];
}

NodeMapping NodeMapping::compose(const NodeMapping& first, const NodeMapping& second) {
  std::vector<std::optional<NodeId>> m(first.size());
  for (NodeId i = 0; i < m.size(); ++i) {
    const auto mid = first.to_compressed_[i];
    if (mid && *mid < second.size()) m[i] = second.to_compressed_[*mid];
  }
  return NodeMapping(std::move(m));
}

std::vector<std::vector<double>> apply_merge_map(const NodeMapping& mapping, const NodeValues& compressed_values) {
  std::vector<std::vector<double>> out(mapping.size());
  for (NodeId i = 0; i < mapping.size(); ++i) {
    const NodeId c = mapping.resolve(i);
    if (c >= compressed_values.node_count()) {
      throw Error(ErrorCode::UnknownNode, "mapping points past the compressed graph", "node " + std::to_string(i));
    }
    const auto v = compressed_values[c];
    out[i].assign(v.begin(), v.end());
  }
  return out;
}

std::vector<NodeId> partition_of(const CompressionReport& report) {
  const std::size_t n = report.merge_map.size();
  std::vector<NodeId> smallest(n, static_cast<NodeId>(n));
  for (NodeId i = 0; i < n; ++i) {
    NodeId& s = smallest[report.merge_map[i]];
    s = std::min(s, i);
  }
  std::vector<NodeId> cls(n);
  for (NodeId i = 0; i < n; ++i) cls[i] = smallest[report.merge_map[i]];
  return cls;
}

std::string report_to_json(const CompressionReport& report) {
  nlohmann::json j;
  j["algorithm"] = std::string(to_string(report.algorithm));
  j["params"] = {{"n", report.params.inits}, {"s", report.params.digits}, {"seed", report.params.seed}};
  j["nodes_before"] = report.nodes_before;
  j["nodes_after"] = report.nodes_after;
  j["edges_before"] = report.edges_before;
  j["edges_after"] = report.edges_after;
  nlohmann::json mm = nlohmann::json::array();
  for (NodeId i = 0; i < report.merge_map.size(); ++i) mm.push_back({i, report.merge_map[i]});
  j["merge_map"] = std::move(mm);
  nlohmann::json ids = nlohmann::json::array();
  for (NodeId i = 0; i < report.compressed_id.size(); ++i) {
    if (report.compressed_id[i]) ids.push_back({i, *report.compressed_id[i]});
  }
  j["compressed_id"] = std::move(ids);
  j["wall_time"] = report.wall_time.count();
  return j.dump();
}

}  // namespace liftcg
