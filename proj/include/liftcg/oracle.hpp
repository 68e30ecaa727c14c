#pragma once

// Brute-force structural equivalence, kept independent of the compressor so it
// can check it. Two nodes are structurally equivalent iff their canonical
// terms match:
//
//   CONST        -> (CONST c)                  c as exact hex floats
//   ordered kind -> (KIND (l1 t1) (l2 t2) ...) in edge-list order
//   symmetric    -> same, with the (label, term) pairs sorted
//   MAX          -> duplicate pairs dropped
//   AVG          -> pair multiplicities divided by their gcd
//
// Terms are hash-consed bottom-up, so sharing never blows up the term size.

#include <cstdint>
#include <functional>
#include <span>
#include <string>
#include <vector>

#include "liftcg/graph.hpp"

namespace liftcg::oracle {

// Canonical class per node: nodes share an id iff their terms are equal.
// Ids are the smallest node carrying each term.
std::vector<NodeId> canonical_partition(const ComputationGraph& g);

// Same, but labels are first passed through `project`. Useful for asking
// whether two subgraphs agree up to a renaming of some weights.
std::vector<NodeId> canonical_partition(const ComputationGraph& g, const std::function<Label(Label)>& project);

// Fully expanded canonical term of one node. Exponential in the worst case;
// meant for small graphs and diagnostics.
std::string canonical_string(const ComputationGraph& g, NodeId node);

struct ProbeResult {
  bool equivalent_likely = true;
  int witness_trial = -1;             // first separating trial
  std::vector<Tensor> witness;        // its weight list
  double max_relative_gap = 0.0;
};

// Evaluates both nodes under `trials` random weight lists (uniform on
// [-1, 1], label 0 fixed at identity) and reports the first list that
// separates them beyond relative 1e-9. Passing is evidence, not proof.
ProbeResult functional_equiv_probe(const ComputationGraph& g, std::span<const Tensor> shapes, NodeId a, NodeId b,
                                   int trials, std::uint64_t seed);

}  // namespace liftcg::oracle
