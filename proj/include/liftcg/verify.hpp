#pragma once

// Output-level comparison of two graphs that share a weight list, e.g. a
// graph and its compression.

#include <cstdint>
#include <optional>
#include <span>
#include <vector>

#include "liftcg/graph.hpp"

namespace liftcg {

struct VerifyResult {
  bool pass = true;
  double max_deviation = 0.0;  // relative, over all trials and output slots
  int trials = 0;
  // First trial exceeding the tolerance and its weights.
  std::optional<int> witness_trial;
  std::size_t witness_slot = 0;
  std::vector<Tensor> witness;
};

// Relative deviation |a - b| / max(|a|, |b|); 0 when both are 0.
double relative_deviation(double a, double b);

// Evaluates both graphs under `trials` random weight lists shaped like
// `shapes` and compares output slot i of `a` with slot i of `b`. Throws
// InvalidArgument when the graphs have different output slots.
VerifyResult verify_outputs(const ComputationGraph& a, const ComputationGraph& b, std::span<const Tensor> shapes,
                            int trials, double tol, std::uint64_t seed);

}  // namespace liftcg
