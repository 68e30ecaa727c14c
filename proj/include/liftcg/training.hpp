#pragma once

// Reverse-mode gradients over computation graphs with shared weights, and
// full-batch ADAM training against mean squared error.

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "liftcg/compressor.hpp"
#include "liftcg/graph.hpp"
#include "liftcg/templates.hpp"

namespace liftcg {

struct Gradients {
  std::vector<Tensor> per_label;  // shaped like the weights; label 0 stays zero
  // MAX components where several children tied for the maximum. The first
  // child in edge order receives the gradient.
  std::size_t nondifferentiable_points = 0;
};

// Zero tensors shaped like `weights`.
Gradients zero_gradients(std::span<const Tensor> weights);

// Accumulates d(sum_i <upstream[i], output_i>)/dW into `grads`. `values` must
// come from evaluate(g, weights). Per-label contributions are added in a
// fixed order: nodes in reverse topological order, children in edge order.
void backward(const ComputationGraph& g, std::span<const Tensor> weights, const NodeValues& values,
              std::span<const std::vector<double>> upstream, Gradients& grads);

Gradients backward(const ComputationGraph& g, std::span<const Tensor> weights, const NodeValues& values,
                   std::span<const std::vector<double>> upstream);

enum class CompressKind { None, Exact, NonExact };

std::string_view to_string(CompressKind k);
std::optional<CompressKind> parse_compress_kind(std::string_view name);

struct CompressMode {
  CompressKind kind = CompressKind::None;
  FingerprintParams params;
};

struct TrainConfig {
  int steps = 1000;
  double lr = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
  int folds = 5;
  std::uint64_t seed = 0;
  // Samples evaluated concurrently. Results do not depend on it.
  unsigned threads = 1;
};

struct FoldMetrics {
  int fold = -1;  // -1 for a run on the full dataset
  double train_accuracy = 0.0;
  double train_mse = 0.0;
  double test_accuracy = 0.0;  // NaN without a test split
  double test_mse = 0.0;
};

struct TrainTrace {
  std::vector<double> loss;  // loss at the start of each step, size == steps
  Gradients final_gradients;  // gradients used by the last step
  std::vector<FoldMetrics> folds;
  std::size_t nodes_before = 0;
  std::size_t nodes_after = 0;
  double train_seconds = 0.0;
  WeightStore weights;  // after training
};

struct CrossValidation {
  std::vector<TrainTrace> runs;
  std::vector<FoldMetrics> folds;
  FoldMetrics mean;
  FoldMetrics stddev;
};

// One training unit: a graph and its target per output slot (scalar each).
struct Example {
  ComputationGraph graph;
  std::vector<double> targets;
};

// Unfolds every sample (one graph each), optionally compresses it.
std::vector<Example> unfold_examples(std::span<const InputSample> samples, const TemplateConfig& cfg,
                                     WeightStore& store, const CompressMode& compress,
                                     std::size_t* nodes_before = nullptr, std::size_t* nodes_after = nullptr);

// Mean squared error over all output slots of `examples`, and the matching
// 0.5-thresholded accuracy.
struct Score {
  double mse = 0.0;
  double accuracy = 0.0;
};
Score score(std::span<const Example> examples, std::span<const Tensor> weights, unsigned threads = 1);

// Runs `cfg.steps` ADAM steps on `store` in place. Throws InvalidArgument for
// steps < 1 or an empty example list.
TrainTrace train_examples(std::span<const Example> examples, WeightStore& store, const TrainConfig& cfg);

TrainTrace train(std::span<const InputSample> samples, const TemplateConfig& tcfg, const TrainConfig& cfg,
                 const CompressMode& compress = {});
TrainTrace train(const TripleStore& kb, const TemplateConfig& tcfg, const TrainConfig& cfg,
                 const CompressMode& compress = {});

// Seeded shuffle, contiguous folds, one training run per fold. Throws
// TooFewSamples when the dataset is smaller than cfg.folds, InvalidArgument
// for folds < 2.
CrossValidation crossvalidate(std::span<const InputSample> samples, const TemplateConfig& tcfg,
                              const TrainConfig& cfg, const CompressMode& compress = {});
CrossValidation crossvalidate(const TripleStore& kb, const TemplateConfig& tcfg, const TrainConfig& cfg,
                              const CompressMode& compress = {});

std::string trace_to_json(const TrainTrace& trace);
// Rows: kind,index,loss,train_acc,test_acc,train_mse,test_mse where kind is
// "step" or "fold"; unused cells are empty.
std::string trace_to_csv(const TrainTrace& trace);
std::string cv_to_json(const CrossValidation& cv);
std::string cv_to_csv(const CrossValidation& cv);

// FNV-1a over the bit patterns of the loss trace.
std::uint64_t trace_hash(const TrainTrace& trace);

}  // namespace liftcg
