#include "liftcg/oracle.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <map>
#include <numeric>
#include <tuple>

#include "liftcg/error.hpp"
#include "liftcg/random.hpp"

namespace liftcg::oracle {

namespace {

std::string hex_constant(const std::vector<double>& c) {
  std::string s;
  char buf[40];
  for (double x : c) {
    std::snprintf(buf, sizeof buf, "%a", x);
    if (!s.empty()) s.push_back(' ');
    s += buf;
  }
  return s;
}

// A term is (kind, constant text, argument list); interning maps each
// distinct term to a dense id.
using Term = std::tuple<int, std::string, std::vector<std::pair<Label, std::uint32_t>>>;

// Algebraic laws of the pooling kinds: MAX(x, x) = MAX(x), and AVG depends on
// argument proportions only.
template <class T>
void reduce_pooled(ActivationKind kind, std::vector<T>& args) {
  if (kind == ActivationKind::Max) {
    args.erase(std::unique(args.begin(), args.end()), args.end());
    return;
  }
  if (kind != ActivationKind::Avg) return;
  std::map<T, std::size_t> count;
  for (const T& a : args) ++count[a];
  std::size_t g = 0;
  for (const auto& [a, c] : count) g = std::gcd(g, c);
  if (g <= 1) return;
  args.clear();
  for (const auto& [a, c] : count) args.insert(args.end(), c / g, a);
}

}  // namespace

std::vector<NodeId> canonical_partition(const ComputationGraph& g, const std::function<Label(Label)>& project) {
  const std::size_t n = g.node_count();
  std::map<Term, std::uint32_t> interned;
  std::vector<std::uint32_t> term_of(n, 0);
  std::vector<NodeId> first_node_of_term;

  // Any topological order works; recompute one here rather than trusting the
  // graph's cached order.
  std::vector<std::uint32_t> remaining(n, 0);
  std::vector<NodeId> ready;
  for (NodeId id = 0; id < n; ++id) {
    remaining[id] = static_cast<std::uint32_t>(g.child_edges(id).size());
    if (remaining[id] == 0) ready.push_back(id);
  }
  std::vector<NodeId> order;
  while (!ready.empty()) {
    const NodeId id = ready.back();
    ready.pop_back();
    order.push_back(id);
    for (std::uint32_t e : g.parent_edges(id)) {
      const NodeId p = g.edges()[e].parent;
      if (--remaining[p] == 0) ready.push_back(p);
    }
  }

  for (NodeId id : order) {
    const Activation& a = g.activation(id);
    std::vector<std::pair<Label, std::uint32_t>> args;
    for (std::uint32_t e : g.child_edges(id)) {
      const Edge& edge = g.edges()[e];
      args.emplace_back(project(edge.label), term_of[edge.child]);
    }
    if (is_symmetric(a.kind)) {
      std::sort(args.begin(), args.end());
      reduce_pooled(a.kind, args);
    }
    Term t{static_cast<int>(a.kind), a.kind == ActivationKind::Const ? hex_constant(a.constant) : std::string{},
           std::move(args)};
    auto [it, inserted] = interned.try_emplace(std::move(t), static_cast<std::uint32_t>(interned.size()));
    if (inserted) first_node_of_term.push_back(id);
    term_of[id] = it->second;
  }

  std::vector<NodeId> smallest(first_node_of_term.size(), static_cast<NodeId>(n));
  for (NodeId id = 0; id < n; ++id) smallest[term_of[id]] = std::min(smallest[term_of[id]], id);
  std::vector<NodeId> cls(n);
  for (NodeId id = 0; id < n; ++id) cls[id] = smallest[term_of[id]];
  return cls;
}

std::vector<NodeId> canonical_partition(const ComputationGraph& g) {
  return canonical_partition(g, [](Label l) { return l; });
}

std::string canonical_string(const ComputationGraph& g, NodeId node) {
  if (node >= g.node_count()) throw Error(ErrorCode::UnknownNode, "no such node", "node " + std::to_string(node));
  const Activation& a = g.activation(node);
  if (a.kind == ActivationKind::Const) return "(CONST " + hex_constant(a.constant) + ")";
  std::vector<std::string> parts;
  for (std::uint32_t e : g.child_edges(node)) {
    const Edge& edge = g.edges()[e];
    parts.push_back("(" + std::to_string(edge.label) + " " + canonical_string(g, edge.child) + ")");
  }
  if (is_symmetric(a.kind)) {
    std::sort(parts.begin(), parts.end());
    reduce_pooled(a.kind, parts);
  }
  std::string s = "(" + std::string(to_string(a.kind));
  for (const auto& p : parts) s += " " + p;
  s += ")";
  return s;
}

ProbeResult functional_equiv_probe(const ComputationGraph& g, std::span<const Tensor> shapes, NodeId a, NodeId b,
                                   int trials, std::uint64_t seed) {
  if (a >= g.node_count() || b >= g.node_count()) throw Error(ErrorCode::UnknownNode, "probe node out of range");
  ProbeResult result;
  Rng rng(splitmix64(seed ^ 0x6f7261636c65ULL));
  for (int t = 0; t < trials; ++t) {
    std::vector<Tensor> w(shapes.begin(), shapes.end());
    for (std::size_t l = 1; l < w.size(); ++l) {
      for (double& x : w[l].data) x = rng.uniform(-1.0, 1.0);
    }
    if (!w.empty()) w[0] = Tensor::scalar(1.0);
    const NodeValues v = evaluate(g, w);
    const auto va = v[a];
    const auto vb = v[b];
    double gap = va.size() == vb.size() ? 0.0 : INFINITY;
    for (std::size_t i = 0; i < std::min(va.size(), vb.size()); ++i) {
      const double scale = std::max({std::fabs(va[i]), std::fabs(vb[i]), 1e-300});
      gap = std::max(gap, std::fabs(va[i] - vb[i]) / scale);
    }
    result.max_relative_gap = std::max(result.max_relative_gap, gap);
    if (gap > 1e-9) {
      result.equivalent_likely = false;
      result.witness_trial = t;
      result.witness = std::move(w);
      return result;
    }
  }
  return result;
}

}  // namespace liftcg::oracle
