#include <doctest.h>

#include <cmath>

#include <json.hpp>

#include "finite_diff.hpp"
#include "fixtures.hpp"
#include "liftcg/data_io.hpp"
#include "liftcg/error.hpp"
#include "liftcg/training.hpp"
#include "random_dag.hpp"

using namespace liftcg;
using namespace liftcg::testing;

namespace {

const std::vector<std::vector<double>> kOne{{1.0}};

// Two leaves through TANH (labels 1, 2) into `kind` (labels 3, 4), read out by
// SIGMOID_SUM (label 5). IDENTITY takes the first branch only.
ComputationGraph probe_graph(ActivationKind kind, std::size_t d) {
  std::vector<Edge> edges{{0, 2, 1}, {1, 3, 2}, {2, 4, 3}};
  if (kind != ActivationKind::Identity) edges.push_back({3, 4, 4});
  edges.push_back({4, 5, 5});
  std::vector<double> c0(d), c1(d);
  for (std::size_t i = 0; i < d; ++i) {
    c0[i] = 0.3 + 0.1 * i;
    c1[i] = -0.7 + 0.25 * i;
  }
  return build_graph({Activation::constant_of(c0), Activation::constant_of(c1), Activation::of(ActivationKind::TanhSum),
                      Activation::of(ActivationKind::TanhSum), Activation::of(kind), Activation::of(ActivationKind::SigmoidSum)},
                     std::move(edges), {5}, d);
}

std::vector<InputSample> toy() { return data::load_graphs(asset("toy_molecules.jsonl")); }

}  // namespace

TEST_CASE("example 1 gradient in closed form") {
  const auto g = example1();
  for (auto [a, b] : {std::pair{0.5, 1.0}, {-0.8, 0.3}, {1.7, -1.1}}) {
    const auto w = scalar_weights({a, b});
    const auto grads = backward(g, w, evaluate(g, w), kOne);
    const double x = a * b;
    CHECK(grads.per_label[1].data[0] == doctest::Approx(b * std::cos(x) - x * b * std::sin(x)).epsilon(1e-14));
    CHECK(grads.per_label[2].data[0] == doctest::Approx(a * std::cos(x) - x * a * std::sin(x)).epsilon(1e-14));
    CHECK(grads.per_label[0].data[0] == 0.0);
    CHECK(gradient_gap(grads.per_label, finite_diff(g, w, kOne)) < 1e-7);
  }
  const auto w = scalar_weights({0.5, 1.0});
  CHECK(backward(g, w, evaluate(g, w), kOne).per_label[1].data[0] == doctest::Approx(0.6378697).epsilon(1e-6));
}

TEST_CASE("zero upstream gives zero gradients") {
  const auto g = example1();
  const auto w = scalar_weights({0.5, 1.0});
  const std::vector<std::vector<double>> zero{{0.0}};
  for (const Tensor& t : backward(g, w, evaluate(g, w), zero).per_label) CHECK(t.data[0] == 0.0);
}

TEST_CASE("duplicate edges contribute twice") {
  // SUM(w c, w c) = 2 w c
  const auto g = build_graph({Activation::constant_of({0.75}), Activation::of(ActivationKind::Sum)}, {{0, 1, 1}, {0, 1, 1}}, {1});
  const auto w = scalar_weights({0.4});
  CHECK(backward(g, w, evaluate(g, w), kOne).per_label[1].data[0] == 1.5);
}

TEST_CASE("backward matches finite differences for every activation") {
  Rng rng(11);
  for (ActivationKind kind : {ActivationKind::Identity, ActivationKind::SigmoidSum, ActivationKind::TanhSum, ActivationKind::ReluSum,
                              ActivationKind::Sum, ActivationKind::Avg, ActivationKind::Max, ActivationKind::MulCos}) {
    for (std::size_t d : {1, 3}) {
      const auto g = probe_graph(kind, d);
      for (int trial = 0; trial < 10; ++trial) {
        auto w = random_weights(5, d, rng);
        w[5] = Tensor::zeros(1, d);  // readout to one value
        for (double& x : w[5].data) x = rng.uniform(-1, 1);
        const auto grads = backward(g, w, evaluate(g, w), kOne);
        CAPTURE(to_string(kind));
        CAPTURE(d);
        CAPTURE(trial);
        CHECK(gradient_gap(grads.per_label, finite_diff(g, w, kOne)) < 1e-5);
      }
    }
  }
}

TEST_CASE("backward on random graphs") {
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    DagSpec spec;
    spec.max_nodes = 80;
    spec.value_dim = seed % 2 ? 2 : 1;
    const auto dag = random_dag(seed, spec);
    std::vector<std::vector<double>> up;
    Rng rng(seed);
    for (NodeId o : dag.graph.outputs()) {
      (void)o;
      up.emplace_back(spec.value_dim);
      for (double& x : up.back()) x = rng.uniform(-1, 1);
    }
    const auto grads = backward(dag.graph, dag.weights, evaluate(dag.graph, dag.weights), up);
    CAPTURE(seed);
    if (grads.nondifferentiable_points == 0) CHECK(gradient_gap(grads.per_label, finite_diff(dag.graph, dag.weights, up)) < 1e-5);
  }
}

TEST_CASE("MAX ties are counted") {
  const auto g = build_graph({Activation::constant_of({0.5}), Activation::of(ActivationKind::Max)}, {{0, 1, 1}, {0, 1, 1}}, {1});
  const auto w = scalar_weights({2.0});
  const auto grads = backward(g, w, evaluate(g, w), kOne);
  CHECK(grads.nondifferentiable_points == 1);
  CHECK(grads.per_label[1].data[0] == 0.5);  // first argmax only
}

TEST_CASE("backward argument checks") {
  const auto g = example1();
  const auto w = scalar_weights({0.5, 1.0});
  const auto v = evaluate(g, w);
  CHECK_THROWS_AS(backward(g, w, v, std::vector<std::vector<double>>{}), Error);
  CHECK_THROWS_AS(backward(g, w, evaluate(chain(2), scalar_weights({0, 0})), kOne), Error);
}

TEST_CASE("a single ADAM step moves each weight by about lr") {
  const auto g = example1();
  WeightStore store;
  store.add(Tensor::scalar(0.5));
  store.add(Tensor::scalar(1.0));
  const std::vector<Example> ex{{g, {0.0}}};
  TrainConfig cfg;
  cfg.steps = 1;
  cfg.lr = 0.01;
  const auto trace = train_examples(ex, store, cfg);
  REQUIRE(trace.loss.size() == 1);
  const double y = 0.5 * std::cos(0.5);
  CHECK(trace.loss[0] == doctest::Approx(y * y).epsilon(1e-14));
  // m_hat / sqrt(v_hat) = g / |g| after one step.
  CHECK(store[1].data[0] == doctest::Approx(0.5 - 0.01).epsilon(1e-9));
  CHECK(store[2].data[0] == doctest::Approx(1.0 - 0.01).epsilon(1e-9));

  cfg.steps = 0;
  CHECK_THROWS_AS(train_examples(ex, store, cfg), Error);
  cfg.steps = 1;
  CHECK_THROWS_AS(train_examples(std::vector<Example>{}, store, cfg), Error);
}

TEST_CASE("frozen weights stay put") {
  const auto g = example1();
  WeightStore store;
  store.add(Tensor::scalar(0.5), false);
  store.add(Tensor::scalar(1.0));
  TrainConfig cfg;
  cfg.steps = 5;
  train_examples(std::vector<Example>{{g, {0.2}}}, store, cfg);
  CHECK(store[1].data[0] == 0.5);
  CHECK(store[2].data[0] != 1.0);
}

TEST_CASE("training is deterministic and independent of the thread count") {
  const auto samples = toy();
  const auto tcfg = TemplateConfig::defaults(Model::Gcn, 1, 5);
  TrainConfig cfg;
  cfg.steps = 25;
  cfg.lr = 1e-2;
  const auto a = train(samples, tcfg, cfg);
  const auto b = train(samples, tcfg, cfg);
  cfg.threads = 4;
  const auto c = train(samples, tcfg, cfg);
  CHECK(trace_hash(a) == trace_hash(b));
  CHECK(trace_hash(a) == trace_hash(c));
  CHECK(a.weights == c.weights);
  CHECK(a.loss.size() == 25);
}

TEST_CASE("compressed training follows the original") {
  const auto samples = toy();
  for (Model m : {Model::Gcn, Model::Gin, Model::Graphlets}) {
    auto tcfg = TemplateConfig::defaults(m, 1, 2);
    if (m == Model::Gin) tcfg.layers = 2;
    TrainConfig cfg;
    cfg.steps = 30;
    cfg.lr = 1e-2;
    const auto plain = train(samples, tcfg, cfg);
    const auto exact = train(samples, tcfg, cfg, {CompressKind::Exact, {1, 12, 0}});
    CHECK(exact.nodes_after < plain.nodes_after);
    CHECK(plain.nodes_before == plain.nodes_after);
    for (std::size_t i = 0; i < plain.loss.size(); ++i) CHECK(exact.loss[i] == doctest::Approx(plain.loss[i]).epsilon(1e-9));
    for (Label l = 1; l < plain.weights.size(); ++l) {
      for (std::size_t j = 0; j < plain.weights[l].size(); ++j) {
        CHECK(exact.weights[l].data[j] == doctest::Approx(plain.weights[l].data[j]).epsilon(1e-6));
      }
    }
  }
}

TEST_CASE("graphlets learn the toy molecules") {
  const auto tcfg = TemplateConfig::defaults(Model::Graphlets, 1, 0);
  TrainConfig cfg;
  cfg.steps = 200;
  cfg.lr = 2e-2;
  const auto t = train(toy(), tcfg, cfg, {CompressKind::Exact, {1, 12, 0}});
  CHECK(t.loss.back() < t.loss.front());
  REQUIRE(t.folds.size() == 1);
  CHECK(t.folds[0].fold == -1);
  CHECK(std::isnan(t.folds[0].test_accuracy));
  CHECK(t.folds[0].train_accuracy >= 0.0);
  CHECK(t.folds[0].train_accuracy <= 1.0);
}

TEST_CASE("cross-validation") {
  const auto samples = toy();
  const auto tcfg = TemplateConfig::defaults(Model::Gcn, 1, 0);
  TrainConfig cfg;
  cfg.steps = 5;
  cfg.folds = static_cast<int>(samples.size());
  const auto cv = crossvalidate(samples, tcfg, cfg);
  CHECK(cv.runs.size() == samples.size());
  CHECK(cv.folds.size() == samples.size());
  for (const auto& f : cv.folds) CHECK((f.test_accuracy == 0.0 || f.test_accuracy == 1.0));
  CHECK(cv.mean.test_accuracy >= 0.0);
  CHECK(cv.stddev.test_mse >= 0.0);
  CHECK(cv_to_csv(crossvalidate(samples, tcfg, cfg)) == cv_to_csv(cv));

  cfg.folds = static_cast<int>(samples.size()) + 1;
  try {
    crossvalidate(samples, tcfg, cfg);
    FAIL("no error");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::TooFewSamples);
  }
  cfg.folds = 1;
  CHECK_THROWS_AS(crossvalidate(samples, tcfg, cfg), Error);
}

TEST_CASE("knowledge-base training") {
  const auto kb = data::gen_kinships(15, 10, 1);
  auto tcfg = TemplateConfig::defaults(Model::Kbe, 2, 0);
  TrainConfig cfg;
  cfg.steps = 40;
  cfg.lr = 2e-2;
  const auto t = train(kb, tcfg, cfg, {CompressKind::Exact, {1, 12, 0}});
  CHECK(t.loss.back() < t.loss.front());
  cfg.steps = 3;
  cfg.folds = 3;
  CHECK(crossvalidate(kb, tcfg, cfg).folds.size() == 3);
}

TEST_CASE("trace exports") {
  TrainConfig cfg;
  cfg.steps = 3;
  const auto t = train(toy(), TemplateConfig::defaults(Model::Gcn, 1, 0), cfg);
  const auto j = nlohmann::json::parse(trace_to_json(t));
  CHECK(j["loss"].size() == 3);
  const auto csv = trace_to_csv(t);
  CHECK(csv.starts_with("kind,index,loss,train_acc,test_acc,train_mse,test_mse\n"));
  CHECK(csv.find("\nstep,2,") != std::string::npos);
  CHECK(csv.find("\nfold,-1,") != std::string::npos);
  CHECK(parse_compress_kind("nonexact") == CompressKind::NonExact);
  CHECK_FALSE(parse_compress_kind("lossy").has_value());
}
