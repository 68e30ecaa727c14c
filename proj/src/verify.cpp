#include "liftcg/verify.hpp"

#include <algorithm>
#include <cmath>

#include "liftcg/compressor.hpp"
#include "liftcg/error.hpp"
#include "liftcg/random.hpp"

namespace liftcg {

double relative_deviation(double a, double b) {
  if (a == b) return 0.0;
  const double scale = std::max(std::fabs(a), std::fabs(b));
  return std::fabs(a - b) / scale;
}

VerifyResult verify_outputs(const ComputationGraph& a, const ComputationGraph& b, std::span<const Tensor> shapes,
                            int trials, double tol, std::uint64_t seed) {
  if (a.outputs().size() != b.outputs().size()) {
    throw Error(ErrorCode::InvalidArgument, "graphs have " + std::to_string(a.outputs().size()) + " and " +
                                                std::to_string(b.outputs().size()) + " output slots");
  }
  if (trials < 1) throw Error(ErrorCode::InvalidArgument, "trials must be at least 1");
  VerifyResult r;
  Rng rng(splitmix64(seed ^ 0x766572696679ULL));
  for (int t = 0; t < trials; ++t) {
    std::vector<Tensor> w = sample_weights(shapes, rng);
    const auto va = output_values(a, evaluate(a, w));
    const auto vb = output_values(b, evaluate(b, w));
    ++r.trials;
    for (std::size_t slot = 0; slot < va.size(); ++slot) {
      if (va[slot].size() != vb[slot].size()) {
        throw Error(ErrorCode::DimensionMismatch, "output lengths differ", "slot " + std::to_string(slot));
      }
      for (std::size_t i = 0; i < va[slot].size(); ++i) {
        double dev = relative_deviation(va[slot][i], vb[slot][i]);
        if (std::isnan(dev)) dev = INFINITY;
        r.max_deviation = std::max(r.max_deviation, dev);
        if (dev > tol && r.pass) {
          r.pass = false;
          r.witness_trial = t;
          r.witness_slot = slot;
          r.witness = w;
        }
      }
    }
  }
  return r;
}

}  // namespace liftcg
