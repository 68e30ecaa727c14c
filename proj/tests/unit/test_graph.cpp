#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <cstring>

#include "fixtures.hpp"
#include "liftcg/error.hpp"
#include "liftcg/graph.hpp"
#include "liftcg/random.hpp"

using namespace liftcg;
using namespace liftcg::testing;

namespace {

ErrorCode code_of(auto&& fn) {
  try {
    fn();
  } catch (const Error& e) {
    return e.code();
  }
  FAIL("expected an Error");
  return ErrorCode::InvalidArgument;
}

bool same_bits(double a, double b) { return std::memcmp(&a, &b, sizeof a) == 0; }

}  // namespace

TEST_CASE("example 1 builds with edge order preserved") {
  const auto g = example1();
  CHECK(g.node_count() == 4);
  CHECK(g.edge_count() == 4);
  REQUIRE(g.child_edges(3).size() == 2);
  CHECK(g.edges()[g.child_edges(3)[0]].child == 1);
  CHECK(g.edges()[g.child_edges(3)[1]].child == 2);
  REQUIRE(g.parent_edges(0).size() == 2);
  CHECK(g.edges()[g.parent_edges(0)[0]].parent == 1);
}

TEST_CASE("a single CONST node is a valid graph") {
  const auto g = build_graph({Activation::constant_of({2.0})}, {}, {0});
  CHECK(g.node_count() == 1);
  const auto v = evaluate(g, scalar_weights({}));
  CHECK(v[0][0] == 2.0);
}

TEST_CASE("construction errors") {
  const Activation c = Activation::constant_of({1.0});
  const Activation id = Activation::of(ActivationKind::Identity);
  const Activation mc = Activation::of(ActivationKind::MulCos);
  const Activation sum = Activation::of(ActivationKind::Sum);

  SUBCASE("the back edge (4,2) of example 1 closes a cycle") {
    CHECK(code_of([&] { build_graph({c, id, id, mc}, {{0, 1, 1}, {0, 2, 1}, {1, 3, 2}, {2, 3, 2}, {3, 1, 1}}, {3}); }) ==
          ErrorCode::ArityViolation);
    // With arity satisfied the cycle itself is reported.
    CHECK(code_of([&] {
            build_graph({c, sum, id, mc}, {{0, 1, 1}, {0, 2, 1}, {1, 3, 2}, {2, 3, 2}, {3, 1, 1}}, {3});
          }) == ErrorCode::CycleDetected);
  }
  SUBCASE("self loop") { CHECK(code_of([&] { build_graph({c, sum}, {{0, 1, 1}, {1, 1, 1}}, {1}); }) == ErrorCode::CycleDetected); }
  SUBCASE("dangling edge") {
    try {
      build_graph({c, id}, {{0, 1, 1}, {5, 1, 1}}, {1});
      FAIL("no error");
    } catch (const Error& e) {
      CHECK(e.code() == ErrorCode::DanglingEdge);
      CHECK(e.where() == "edge 1");
    }
  }
  SUBCASE("arity") {
    CHECK(code_of([&] { build_graph({c, id}, {{0, 1, 1}, {0, 1, 1}}, {1}); }) == ErrorCode::ArityViolation);
    CHECK(code_of([&] { build_graph({c, mc}, {{0, 1, 1}}, {1}); }) == ErrorCode::ArityViolation);
    CHECK(code_of([&] { build_graph({c, c}, {{0, 1, 1}}, {1}); }) == ErrorCode::ArityViolation);
    CHECK(code_of([&] { build_graph({c, sum}, {}, {1}); }) == ErrorCode::ArityViolation);
    CHECK(code_of([&] { build_graph({Activation::constant_of({})}, {}, {0}); }) == ErrorCode::ArityViolation);
  }
  SUBCASE("unknown output") { CHECK(code_of([&] { build_graph({c}, {}, {1}); }) == ErrorCode::UnknownNode); }
  SUBCASE("zero value_dim") { CHECK(code_of([&] { build_graph({c}, {}, {0}, 0); }) == ErrorCode::InvalidArgument); }
}

TEST_CASE("example 1 evaluates to (w1 w2) cos(w1 w2)") {
  const auto g = example1();
  for (auto [w1, w2] : {std::pair{0.5, 1.0}, {-0.3, 0.7}, {1.2, -0.9}, {0.0, 0.4}, {0.0, -123.0}}) {
    const auto v = evaluate(g, scalar_weights({w1, w2}));
    const double p = w1 * w2;
    CHECK(v[3][0] == doctest::Approx(p * std::cos(p)).epsilon(1e-15));
  }
  CHECK(evaluate(g, scalar_weights({0.5, 1.0}))[3][0] == doctest::Approx(0.438791).epsilon(1e-6));
  CHECK(evaluate(g, scalar_weights({0.0, 5.0}))[3][0] == 0.0);
}

TEST_CASE("every activation against its closed form") {
  // Children x = 0.3, y = -0.8, z = 0.5 with weights a, b, c on labels 1..3.
  const double a = 0.7, b = -0.4, c = 1.3;
  const double x = 0.3, y = -0.8, z = 0.5;
  const auto w = scalar_weights({a, b, c});
  auto three = [&](ActivationKind k) {
    const auto g = build_graph({Activation::constant_of({x}), Activation::constant_of({y}), Activation::constant_of({z}),
                                Activation::of(k)},
                               {{0, 3, 1}, {1, 3, 2}, {2, 3, 3}}, {3});
    return evaluate(g, w)[3][0];
  };
  const double s = a * x + b * y + c * z;
  CHECK(three(ActivationKind::SigmoidSum) == doctest::Approx(1.0 / (1.0 + std::exp(-s))).epsilon(1e-14));
  CHECK(three(ActivationKind::TanhSum) == doctest::Approx(std::tanh(s)).epsilon(1e-14));
  CHECK(three(ActivationKind::ReluSum) == doctest::Approx(std::max(0.0, s)).epsilon(1e-14));
  CHECK(three(ActivationKind::Sum) == doctest::Approx(s).epsilon(1e-14));
  CHECK(three(ActivationKind::Avg) == doctest::Approx(s / 3.0).epsilon(1e-14));
  CHECK(three(ActivationKind::Max) == doctest::Approx(std::max({a * x, b * y, c * z})).epsilon(1e-14));

  const auto mc = build_graph({Activation::constant_of({x}), Activation::constant_of({y}), Activation::of(ActivationKind::MulCos)},
                              {{0, 2, 1}, {1, 2, 2}}, {2});
  CHECK(evaluate(mc, w)[2][0] == doctest::Approx(a * x * std::cos(b * y)).epsilon(1e-14));

  const auto relu_neg = build_graph({Activation::constant_of({1.0}), Activation::of(ActivationKind::ReluSum)}, {{0, 1, 2}}, {1});
  CHECK(evaluate(relu_neg, w)[1][0] == 0.0);
}

TEST_CASE("matrix weights apply as matrix-vector products") {
  const auto g = build_graph({Activation::constant_of({1.0, 2.0}), Activation::of(ActivationKind::Sum),
                              Activation::of(ActivationKind::Identity)},
                             {{0, 1, 1}, {1, 2, 2}}, {2}, 2);
  std::vector<Tensor> w{Tensor::scalar(1.0), Tensor{2, 2, {1.0, -1.0, 0.5, 2.0}}, Tensor{1, 2, {3.0, 4.0}}};
  const auto v = evaluate(g, w);
  REQUIRE(v.dim(1) == 2);
  CHECK(v[1][0] == -1.0);
  CHECK(v[1][1] == 4.5);
  REQUIRE(v.dim(2) == 1);
  CHECK(v[2][0] == 3.0 * -1.0 + 4.0 * 4.5);
}

TEST_CASE("evaluation errors") {
  const auto g = example1();
  CHECK(code_of([&] { evaluate(g, scalar_weights({0.5})); }) == ErrorCode::WeightIndexOutOfRange);

  const auto m = build_graph({Activation::constant_of({1.0, 2.0}), Activation::of(ActivationKind::Sum)}, {{0, 1, 1}}, {1}, 2);
  std::vector<Tensor> bad{Tensor::scalar(1.0), Tensor::zeros(3, 3)};
  CHECK(code_of([&] { evaluate(m, bad); }) == ErrorCode::DimensionMismatch);

  const auto mixed = build_graph({Activation::constant_of({1.0, 2.0}), Activation::constant_of({1.0}),
                                  Activation::of(ActivationKind::Sum)},
                                 {{0, 2, 1}, {1, 2, 1}}, {2}, 2);
  CHECK(code_of([&] { evaluate(mixed, scalar_weights({1.0})); }) == ErrorCode::DimensionMismatch);
}

TEST_CASE("duplicate edges contribute once per occurrence") {
  auto g1 = build_graph({Activation::constant_of({0.6}), Activation::of(ActivationKind::Sum)}, {{0, 1, 1}}, {1});
  auto g2 = build_graph({Activation::constant_of({0.6}), Activation::of(ActivationKind::Sum)}, {{0, 1, 1}, {0, 1, 1}}, {1});
  const auto w = scalar_weights({0.37});
  CHECK(evaluate(g2, w)[1][0] == 2.0 * evaluate(g1, w)[1][0]);
}

TEST_CASE("symmetric kinds are bit-identical under argument permutation") {
  Rng rng(11);
  for (ActivationKind k : {ActivationKind::SigmoidSum, ActivationKind::TanhSum, ActivationKind::ReluSum, ActivationKind::Sum,
                           ActivationKind::Avg, ActivationKind::Max}) {
    CHECK(is_symmetric(k));
    std::vector<Activation> nodes;
    for (int i = 0; i < 7; ++i) nodes.push_back(Activation::constant_of({rng.uniform(-1, 1), rng.uniform(-1, 1)}));
    nodes.push_back(Activation::of(k));
    std::vector<Edge> edges;
    for (NodeId i = 0; i < 7; ++i) edges.push_back({i, 7, static_cast<Label>(1 + i % 3)});
    const auto w = scalar_weights({rng.uniform(-1, 1), rng.uniform(-1, 1), rng.uniform(-1, 1)});
    const auto base = evaluate(build_graph(nodes, edges, {7}, 2), w);
    for (int t = 0; t < 20; ++t) {
      seeded_shuffle(edges.begin(), edges.end(), rng);
      const auto v = evaluate(build_graph(nodes, edges, {7}, 2), w);
      CHECK(same_bits(v[7][0], base[7][0]));
      CHECK(same_bits(v[7][1], base[7][1]));
    }
  }
  CHECK_FALSE(is_symmetric(ActivationKind::MulCos));
  CHECK_FALSE(is_symmetric(ActivationKind::Identity));
  CHECK_FALSE(is_symmetric(ActivationKind::Const));
}

TEST_CASE("evaluation is deterministic and children come first") {
  const auto g = example1();
  const auto w = scalar_weights({0.31, -0.77});
  const auto a = evaluate(g, w);
  const auto b = evaluate(g, w);
  for (NodeId i = 0; i < g.node_count(); ++i) CHECK(same_bits(a[i][0], b[i][0]));

  std::vector<std::size_t> pos(g.node_count());
  const auto order = g.topological_order();
  for (std::size_t i = 0; i < order.size(); ++i) pos[order[i]] = i;
  for (const Edge& e : g.edges()) CHECK(pos[e.child] < pos[e.parent]);
}

TEST_CASE("node heights are longest paths from leaves") {
  const auto h = node_heights(example1());
  CHECK(h == std::vector<std::uint32_t>{0, 1, 1, 2});
}

TEST_CASE("weight store") {
  WeightStore s;
  REQUIRE(s.size() == 1);
  CHECK(s[0] == Tensor::scalar(1.0));
  CHECK_FALSE(s.trainable(0));
  CHECK(code_of([&] { s.mutable_tensor(0); }) == ErrorCode::InvalidArgument);

  const Label a = s.ensure("L1/W1", 2, 2, 5);
  const Label b = s.ensure("L1/W2", 1, 1, 5);
  CHECK(s.ensure("L1/W1", 2, 2, 5) == a);
  CHECK(code_of([&] { s.ensure("L1/W1", 3, 3, 5); }) == ErrorCode::DimensionMismatch);
  for (double x : s[a].data) {
    CHECK(x >= -1.0);
    CHECK(x <= 1.0);
  }

  // Values depend on (key, seed), not on allocation order.
  WeightStore t;
  const Label b2 = t.ensure("L1/W2", 1, 1, 5);
  const Label a2 = t.ensure("L1/W1", 2, 2, 5);
  CHECK(t[a2] == s[a]);
  CHECK(t[b2] == s[b]);

  t.seal();
  CHECK(t.ensure("L1/W1", 2, 2, 5) == a2);
  CHECK(code_of([&] { t.ensure("L9/W1", 1, 1, 5); }) == ErrorCode::InvalidArgument);
}
