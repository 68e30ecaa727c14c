#include "liftcg/training.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstring>
#include <limits>
#include <numeric>
#include <thread>

#include <json.hpp>

#include "liftcg/error.hpp"
#include "liftcg/random.hpp"
#include "liftcg/simd/kernels.hpp"

namespace liftcg {

Gradients zero_gradients(std::span<const Tensor> weights) {
  Gradients g;
  g.per_label.reserve(weights.size());
  for (const Tensor& w : weights) g.per_label.push_back(Tensor::zeros(w.rows, w.cols));
  return g;
}

void backward(const ComputationGraph& g, std::span<const Tensor> weights, const NodeValues& values,
              std::span<const std::vector<double>> upstream, Gradients& grads) {
  const auto& kern = simd::active_kernels();
  const std::size_t n = g.node_count();
  if (values.node_count() != n) throw Error(ErrorCode::InvalidArgument, "values do not belong to this graph");
  if (upstream.size() != g.outputs().size()) {
    throw Error(ErrorCode::InvalidArgument, "need one upstream gradient per output slot");
  }
  if (grads.per_label.size() != weights.size()) {
    throw Error(ErrorCode::InvalidArgument, "gradient store does not match the weights");
  }

  std::vector<std::size_t> offset(n + 1, 0);
  for (NodeId id = 0; id < n; ++id) offset[id + 1] = offset[id] + values.dim(id);
  std::vector<double> adj(offset[n], 0.0);
  for (std::size_t i = 0; i < upstream.size(); ++i) {
    const NodeId out = g.outputs()[i];
    if (upstream[i].size() != values.dim(out)) {
      throw Error(ErrorCode::DimensionMismatch, "upstream gradient has the wrong length", "output " + std::to_string(i));
    }
    kern.axpy(1.0, upstream[i].data(), adj.data() + offset[out], upstream[i].size());
  }

  const auto edges = g.edges();
  const auto order = g.topological_order();
  std::vector<double> args;
  std::vector<double> delta;
  for (auto it = order.rbegin(); it != order.rend(); ++it) {
    const NodeId id = *it;
    const Activation& act = g.activation(id);
    if (act.kind == ActivationKind::Const) continue;
    const std::size_t d = values.dim(id);
    const double* a = adj.data() + offset[id];
    if (std::all_of(a, a + d, [](double x) { return x == 0.0; })) continue;

    const auto children = g.child_edges(id);
    const std::size_t k = children.size();
    const auto y = values[id];
    const bool needs_args = act.kind == ActivationKind::MulCos || act.kind == ActivationKind::Max;
    if (needs_args) {
      args.resize(k * d);
      for (std::size_t j = 0; j < k; ++j) {
        const Edge& e = edges[children[j]];
        weighted_argument(weights[e.label], values[e.child], {args.data() + j * d, d});
      }
    }

    // delta holds d(out)/d(argument j); sum-family nodes share one row.
    bool shared = true;
    delta.assign(d, 0.0);
    switch (act.kind) {
      case ActivationKind::Identity:
      case ActivationKind::Sum:
        std::copy(a, a + d, delta.begin());
        break;
      case ActivationKind::Avg:
        for (std::size_t i = 0; i < d; ++i) delta[i] = a[i] / static_cast<double>(k);
        break;
      case ActivationKind::SigmoidSum:
        for (std::size_t i = 0; i < d; ++i) delta[i] = a[i] * (y[i] * (1.0 - y[i]));
        break;
      case ActivationKind::TanhSum:
        for (std::size_t i = 0; i < d; ++i) delta[i] = a[i] * (1.0 - y[i] * y[i]);
        break;
      case ActivationKind::ReluSum:
        for (std::size_t i = 0; i < d; ++i) delta[i] = y[i] > 0.0 ? a[i] : 0.0;
        break;
      case ActivationKind::MulCos:
        shared = false;
        delta.assign(2 * d, 0.0);
        for (std::size_t i = 0; i < d; ++i) {
          delta[i] = a[i] * std::cos(args[d + i]);
          delta[d + i] = -a[i] * args[i] * std::sin(args[d + i]);
        }
        break;
      case ActivationKind::Max:
        shared = false;
        delta.assign(k * d, 0.0);
        for (std::size_t i = 0; i < d; ++i) {
          std::size_t winner = k;
          std::size_t ties = 0;
          for (std::size_t j = 0; j < k; ++j) {
            if (args[j * d + i] == y[i]) {
              if (winner == k) winner = j;
              ++ties;
            }
          }
          if (winner == k) continue;  // NaN
          if (ties > 1) ++grads.nondifferentiable_points;
          delta[winner * d + i] = a[i];
        }
        break;
      case ActivationKind::Const:
        break;
    }

    for (std::size_t j = 0; j < k; ++j) {
      const Edge& e = edges[children[j]];
      const double* dj = delta.data() + (shared ? 0 : j * d);
      const Tensor& w = weights[e.label];
      const auto x = values[e.child];
      double* child_adj = adj.data() + offset[e.child];
      if (e.label != kIdentityLabel) {
        Tensor& gw = grads.per_label[e.label];
        if (w.is_scalar()) {
          gw.data[0] += kern.dot(dj, x.data(), d);
        } else {
          kern.outer_acc(dj, w.rows, x.data(), w.cols, gw.data.data());
        }
      }
      if (g.activation(e.child).kind == ActivationKind::Const) continue;
      if (w.is_scalar()) {
        kern.axpy(w.data[0], dj, child_adj, d);
      } else {
        kern.gemv_t_acc(w.data.data(), w.rows, w.cols, dj, child_adj);
      }
    }
  }
}

Gradients backward(const ComputationGraph& g, std::span<const Tensor> weights, const NodeValues& values,
                   std::span<const std::vector<double>> upstream) {
  Gradients grads = zero_gradients(weights);
  backward(g, weights, values, upstream, grads);
  return grads;
}

std::string_view to_string(CompressKind k) {
  switch (k) {
    case CompressKind::None:
      return "none";
    case CompressKind::Exact:
      return "exact";
    case CompressKind::NonExact:
      return "nonexact";
  }
  return "?";
}

std::optional<CompressKind> parse_compress_kind(std::string_view name) {
  for (CompressKind k : {CompressKind::None, CompressKind::Exact, CompressKind::NonExact}) {
    if (to_string(k) == name) return k;
  }
  return std::nullopt;
}

namespace {

// Runs fn(i) for i in [begin, end) on up to `threads` threads, static chunks.
template <class Fn>
void parallel_for(std::size_t begin, std::size_t end, unsigned threads, Fn&& fn) {
  const std::size_t n = end - begin;
  const std::size_t t = std::min<std::size_t>(std::max(1u, threads), n);
  if (t <= 1) {
    for (std::size_t i = begin; i < end; ++i) fn(i);
    return;
  }
  std::vector<std::thread> pool;
  std::vector<std::exception_ptr> errors(t);
  for (std::size_t w = 0; w < t; ++w) {
    pool.emplace_back([&, w] {
      try {
        for (std::size_t i = begin + w * n / t; i < begin + (w + 1) * n / t; ++i) fn(i);
      } catch (...) {
        errors[w] = std::current_exception();
      }
    });
  }
  for (auto& th : pool) th.join();
  for (auto& e : errors) {
    if (e) std::rethrow_exception(e);
  }
}

Example compressed_example(ComputationGraph g, std::vector<double> targets, const WeightStore& store,
                           const CompressMode& compress, std::size_t* before, std::size_t* after) {
  if (before) *before += g.node_count();
  switch (compress.kind) {
    case CompressKind::Exact:
      g = compress_exact(g, store, compress.params).graph;
      break;
    case CompressKind::NonExact:
      g = compress_nonexact(g, store, compress.params).graph;
      break;
    case CompressKind::None:
      break;
  }
  if (after) *after += g.node_count();
  return Example{std::move(g), std::move(targets)};
}

struct Pass {
  double sq_error = 0.0;
  std::size_t correct = 0;
  std::size_t slots = 0;
};

Pass forward(const Example& ex, std::span<const Tensor> weights, NodeValues* keep) {
  NodeValues v = evaluate(ex.graph, weights);
  Pass p;
  const auto outs = ex.graph.outputs();
  if (outs.size() != ex.targets.size()) throw Error(ErrorCode::InvalidArgument, "one target per output slot required");
  for (std::size_t i = 0; i < outs.size(); ++i) {
    const double y = v[outs[i]][0];
    const double t = ex.targets[i];
    p.sq_error += (y - t) * (y - t);
    p.correct += (y >= 0.5) == (t >= 0.5);
  }
  p.slots = outs.size();
  if (keep) *keep = std::move(v);
  return p;
}

std::size_t total_slots(std::span<const Example> examples) {
  std::size_t n = 0;
  for (const Example& e : examples) n += e.graph.outputs().size();
  return n;
}

void add_into(Gradients& acc, const Gradients& g) {
  const auto& kern = simd::active_kernels();
  for (std::size_t l = 0; l < acc.per_label.size(); ++l) {
    kern.axpy(1.0, g.per_label[l].data.data(), acc.per_label[l].data.data(), acc.per_label[l].data.size());
  }
  acc.nondifferentiable_points += g.nondifferentiable_points;
}

// Loss and gradient of the mean squared error over all output slots. Per-example
// gradients are reduced in example order, in chunks, whatever the thread count.
double loss_and_gradient(std::span<const Example> examples, std::span<const Tensor> weights, unsigned threads,
                         Gradients& out) {
  const double n = static_cast<double>(total_slots(examples));
  out = zero_gradients(weights);
  double sq = 0.0;
  constexpr std::size_t kChunk = 64;
  std::vector<Gradients> part;
  std::vector<double> errors;
  for (std::size_t begin = 0; begin < examples.size(); begin += kChunk) {
    const std::size_t end = std::min(examples.size(), begin + kChunk);
    part.assign(end - begin, Gradients{});
    errors.assign(end - begin, 0.0);
    parallel_for(begin, end, threads, [&](std::size_t i) {
      const Example& ex = examples[i];
      NodeValues v;
      errors[i - begin] = forward(ex, weights, &v).sq_error;
      const auto outs = ex.graph.outputs();
      std::vector<std::vector<double>> up(outs.size());
      for (std::size_t s = 0; s < outs.size(); ++s) {
        up[s].assign(v.dim(outs[s]), 0.0);
        up[s][0] = 2.0 * (v[outs[s]][0] - ex.targets[s]) / n;
      }
      part[i - begin] = backward(ex.graph, weights, v, up);
    });
    for (std::size_t i = 0; i < part.size(); ++i) {
      add_into(out, part[i]);
      sq += errors[i];
    }
  }
  return sq / n;
}

std::vector<double> targets_of(std::span<const Triple> triples) {
  std::vector<double> t;
  for (const Triple& x : triples) t.push_back(static_cast<double>(x.label));
  return t;
}

FoldMetrics summarize(int fold, const Score& train, const std::optional<Score>& test) {
  const double nan = std::numeric_limits<double>::quiet_NaN();
  return FoldMetrics{fold, train.accuracy, train.mse, test ? test->accuracy : nan, test ? test->mse : nan};
}

}  // namespace

std::vector<Example> unfold_examples(std::span<const InputSample> samples, const TemplateConfig& cfg,
                                     WeightStore& store, const CompressMode& compress, std::size_t* nodes_before,
                                     std::size_t* nodes_after) {
  std::vector<Example> out;
  out.reserve(samples.size());
  for (const InputSample& s : samples) {
    out.push_back(compressed_example(unfold(s, cfg, store), {s.label}, store, compress, nodes_before, nodes_after));
  }
  return out;
}

Score score(std::span<const Example> examples, std::span<const Tensor> weights, unsigned threads) {
  std::vector<Pass> passes(examples.size());
  parallel_for(0, examples.size(), threads, [&](std::size_t i) { passes[i] = forward(examples[i], weights, nullptr); });
  Pass total;
  for (const Pass& p : passes) {
    total.sq_error += p.sq_error;
    total.correct += p.correct;
    total.slots += p.slots;
  }
  if (total.slots == 0) return {};
  const double n = static_cast<double>(total.slots);
  return Score{total.sq_error / n, static_cast<double>(total.correct) / n};
}

TrainTrace train_examples(std::span<const Example> examples, WeightStore& store, const TrainConfig& cfg) {
  if (cfg.steps < 1) throw Error(ErrorCode::InvalidArgument, "steps must be at least 1");
  if (examples.empty() || total_slots(examples) == 0) throw Error(ErrorCode::InvalidArgument, "nothing to train on");
  const auto& kern = simd::active_kernels();
  const auto start = std::chrono::steady_clock::now();

  TrainTrace trace;
  std::vector<std::vector<double>> m(store.size()), v(store.size());
  for (Label l = 0; l < store.size(); ++l) {
    m[l].assign(store[l].data.size(), 0.0);
    v[l].assign(store[l].data.size(), 0.0);
  }
  double p1 = 1.0, p2 = 1.0;
  for (int step = 1; step <= cfg.steps; ++step) {
    Gradients grads;
    trace.loss.push_back(loss_and_gradient(examples, store.tensors(), cfg.threads, grads));
    p1 *= cfg.beta1;
    p2 *= cfg.beta2;
    const simd::AdamStep as{cfg.lr, cfg.beta1, cfg.beta2, cfg.eps, 1.0 - p1, 1.0 - p2};
    for (Label l = 1; l < store.size(); ++l) {
      if (!store.trainable(l)) continue;
      Tensor& w = store.mutable_tensor(l);
      kern.adam(w.data.data(), m[l].data(), v[l].data(), grads.per_label[l].data.data(), w.data.size(), as);
    }
    if (step == cfg.steps) trace.final_gradients = std::move(grads);
  }
  trace.train_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  trace.weights = store;
  return trace;
}

TrainTrace train(std::span<const InputSample> samples, const TemplateConfig& tcfg, const TrainConfig& cfg,
                 const CompressMode& compress) {
  if (samples.empty()) throw Error(ErrorCode::InvalidArgument, "empty dataset");
  WeightStore store;
  prepare_store(samples, tcfg, store);
  store.seal();
  std::size_t before = 0, after = 0;
  const auto examples = unfold_examples(samples, tcfg, store, compress, &before, &after);
  TrainTrace trace = train_examples(examples, store, cfg);
  trace.nodes_before = before;
  trace.nodes_after = after;
  trace.folds.push_back(summarize(-1, score(examples, store.tensors(), cfg.threads), std::nullopt));
  return trace;
}

TrainTrace train(const TripleStore& kb, const TemplateConfig& tcfg, const TrainConfig& cfg,
                 const CompressMode& compress) {
  if (kb.triples.empty()) throw Error(ErrorCode::EmptyKB, "knowledge base has no triples");
  WeightStore store;
  prepare_store(kb, tcfg, store);
  store.seal();
  TripleStore facts{kb.entities, kb.relations, {}};
  for (const Triple& t : kb.triples) {
    if (t.label == 1) facts.triples.push_back(t);
  }
  std::size_t before = 0, after = 0;
  std::vector<Example> examples;
  examples.push_back(compressed_example(unfold_kbe(facts, kb.triples, tcfg, store), targets_of(kb.triples), store,
                                        compress, &before, &after));
  TrainTrace trace = train_examples(examples, store, cfg);
  trace.nodes_before = before;
  trace.nodes_after = after;
  trace.folds.push_back(summarize(-1, score(examples, store.tensors(), cfg.threads), std::nullopt));
  return trace;
}

namespace {

std::vector<std::size_t> fold_order(std::size_t n, const TrainConfig& cfg) {
  if (cfg.folds < 2) throw Error(ErrorCode::InvalidArgument, "folds must be at least 2");
  if (n < static_cast<std::size_t>(cfg.folds)) {
    throw Error(ErrorCode::TooFewSamples,
                std::to_string(n) + " samples cannot fill " + std::to_string(cfg.folds) + " folds");
  }
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  Rng rng(splitmix64(cfg.seed ^ 0x666f6c6473ULL));
  seeded_shuffle(order.begin(), order.end(), rng);
  return order;
}

// Test indices of fold f, ascending, and the remaining training indices.
std::pair<std::vector<std::size_t>, std::vector<std::size_t>> split(const std::vector<std::size_t>& order, int f,
                                                                    int folds) {
  const std::size_t n = order.size();
  const std::size_t lo = static_cast<std::size_t>(f) * n / static_cast<std::size_t>(folds);
  const std::size_t hi = static_cast<std::size_t>(f + 1) * n / static_cast<std::size_t>(folds);
  std::vector<std::size_t> test(order.begin() + static_cast<std::ptrdiff_t>(lo),
                                order.begin() + static_cast<std::ptrdiff_t>(hi));
  std::vector<std::size_t> train(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(lo));
  train.insert(train.end(), order.begin() + static_cast<std::ptrdiff_t>(hi), order.end());
  std::sort(test.begin(), test.end());
  std::sort(train.begin(), train.end());
  return {std::move(train), std::move(test)};
}

void aggregate(CrossValidation& cv) {
  const double k = static_cast<double>(cv.folds.size());
  auto fields = [](FoldMetrics& f) {
    return std::array<double*, 4>{&f.train_accuracy, &f.train_mse, &f.test_accuracy, &f.test_mse};
  };
  cv.mean = FoldMetrics{};
  cv.stddev = FoldMetrics{};
  const auto mean = fields(cv.mean);
  const auto sd = fields(cv.stddev);
  for (FoldMetrics& f : cv.folds) {
    const auto x = fields(f);
    for (std::size_t i = 0; i < 4; ++i) *mean[i] += *x[i] / k;
  }
  for (FoldMetrics& f : cv.folds) {
    const auto x = fields(f);
    for (std::size_t i = 0; i < 4; ++i) *sd[i] += (*x[i] - *mean[i]) * (*x[i] - *mean[i]) / k;
  }
  for (std::size_t i = 0; i < 4; ++i) *sd[i] = std::sqrt(*sd[i]);
}

}  // namespace

CrossValidation crossvalidate(std::span<const InputSample> samples, const TemplateConfig& tcfg,
                              const TrainConfig& cfg, const CompressMode& compress) {
  const auto order = fold_order(samples.size(), cfg);
  CrossValidation cv;
  for (int f = 0; f < cfg.folds; ++f) {
    const auto [train_idx, test_idx] = split(order, f, cfg.folds);
    std::vector<InputSample> train_set, test_set;
    for (std::size_t i : train_idx) train_set.push_back(samples[i]);
    for (std::size_t i : test_idx) test_set.push_back(samples[i]);

    // Every fold starts from the same initialization of the full dataset's weights.
    WeightStore store;
    prepare_store(samples, tcfg, store);
    store.seal();
    std::size_t before = 0, after = 0;
    const auto train_ex = unfold_examples(train_set, tcfg, store, compress, &before, &after);
    const auto test_ex = unfold_examples(test_set, tcfg, store, compress);
    TrainTrace trace = train_examples(train_ex, store, cfg);
    trace.nodes_before = before;
    trace.nodes_after = after;
    const FoldMetrics fm =
        summarize(f, score(train_ex, store.tensors(), cfg.threads), score(test_ex, store.tensors(), cfg.threads));
    trace.folds.push_back(fm);
    cv.folds.push_back(fm);
    cv.runs.push_back(std::move(trace));
  }
  aggregate(cv);
  return cv;
}

CrossValidation crossvalidate(const TripleStore& kb, const TemplateConfig& tcfg, const TrainConfig& cfg,
                              const CompressMode& compress) {
  const auto order = fold_order(kb.triples.size(), cfg);
  CrossValidation cv;
  for (int f = 0; f < cfg.folds; ++f) {
    const auto [train_idx, test_idx] = split(order, f, cfg.folds);
    TripleStore facts{kb.entities, kb.relations, {}};
    std::vector<Triple> train_q, test_q;
    for (std::size_t i : train_idx) {
      train_q.push_back(kb.triples[i]);
      if (kb.triples[i].label == 1) facts.triples.push_back(kb.triples[i]);
    }
    for (std::size_t i : test_idx) test_q.push_back(kb.triples[i]);

    WeightStore store;
    prepare_store(kb, tcfg, store);
    store.seal();
    std::size_t before = 0, after = 0;
    std::vector<Example> train_ex, test_ex;
    train_ex.push_back(compressed_example(unfold_kbe(facts, train_q, tcfg, store), targets_of(train_q), store,
                                          compress, &before, &after));
    test_ex.push_back(compressed_example(unfold_kbe(facts, test_q, tcfg, store), targets_of(test_q), store, compress,
                                         nullptr, nullptr));
    TrainTrace trace = train_examples(train_ex, store, cfg);
    trace.nodes_before = before;
    trace.nodes_after = after;
    const FoldMetrics fm =
        summarize(f, score(train_ex, store.tensors(), cfg.threads), score(test_ex, store.tensors(), cfg.threads));
    trace.folds.push_back(fm);
    cv.folds.push_back(fm);
    cv.runs.push_back(std::move(trace));
  }
  aggregate(cv);
  return cv;
}

namespace {

using nlohmann::json;

json number_or_null(double x) { return std::isfinite(x) ? json(x) : json(nullptr); }

json fold_json(const FoldMetrics& f) {
  return json{{"fold", f.fold},
              {"train_accuracy", number_or_null(f.train_accuracy)},
              {"train_mse", number_or_null(f.train_mse)},
              {"test_accuracy", number_or_null(f.test_accuracy)},
              {"test_mse", number_or_null(f.test_mse)}};
}

json trace_json(const TrainTrace& t) {
  json grads = json::array();
  for (Label l = 1; l < t.final_gradients.per_label.size(); ++l) {
    const Tensor& g = t.final_gradients.per_label[l];
    json entry{{"label", l}, {"shape", {g.rows, g.cols}}, {"data", g.data}};
    if (l < t.weights.size() && !t.weights.key(l).empty()) entry["key"] = t.weights.key(l);
    grads.push_back(std::move(entry));
  }
  json folds = json::array();
  for (const FoldMetrics& f : t.folds) folds.push_back(fold_json(f));
  return json{{"steps", t.loss.size()},
              {"loss", t.loss},
              {"final_gradients", std::move(grads)},
              {"nondifferentiable_points", t.final_gradients.nondifferentiable_points},
              {"folds", std::move(folds)},
              {"nodes_before", t.nodes_before},
              {"nodes_after", t.nodes_after},
              {"train_seconds", t.train_seconds}};
}

std::string cell(double x) {
  if (!std::isfinite(x)) return "";
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", x);
  return buf;
}

std::string fold_row(const char* kind, const std::string& index, const FoldMetrics& f) {
  return std::string(kind) + "," + index + ",," + cell(f.train_accuracy) + "," + cell(f.test_accuracy) + "," +
         cell(f.train_mse) + "," + cell(f.test_mse) + "\n";
}

constexpr const char* kCsvHeader = "kind,index,loss,train_acc,test_acc,train_mse,test_mse\n";

}  // namespace

std::string trace_to_json(const TrainTrace& trace) { return trace_json(trace).dump(2); }

std::string trace_to_csv(const TrainTrace& trace) {
  std::string s = kCsvHeader;
  for (std::size_t i = 0; i < trace.loss.size(); ++i) s += "step," + std::to_string(i) + "," + cell(trace.loss[i]) + ",,,,\n";
  for (const FoldMetrics& f : trace.folds) s += fold_row("fold", std::to_string(f.fold), f);
  return s;
}

std::string cv_to_json(const CrossValidation& cv) {
  json runs = json::array();
  for (const TrainTrace& t : cv.runs) runs.push_back(trace_json(t));
  json folds = json::array();
  for (const FoldMetrics& f : cv.folds) folds.push_back(fold_json(f));
  return json{{"folds", std::move(folds)}, {"mean", fold_json(cv.mean)}, {"std", fold_json(cv.stddev)},
              {"runs", std::move(runs)}}
      .dump(2);
}

std::string cv_to_csv(const CrossValidation& cv) {
  std::string s = kCsvHeader;
  for (const FoldMetrics& f : cv.folds) s += fold_row("fold", std::to_string(f.fold), f);
  s += fold_row("mean", "", cv.mean);
  s += fold_row("std", "", cv.stddev);
  return s;
}

std::uint64_t trace_hash(const TrainTrace& trace) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (double x : trace.loss) {
    std::uint64_t bits;
    std::memcpy(&bits, &x, sizeof bits);
    for (int i = 0; i < 8; ++i) {
      h ^= (bits >> (8 * i)) & 0xff;
      h *= 0x100000001b3ULL;
    }
  }
  return h;
}

}  // namespace liftcg
