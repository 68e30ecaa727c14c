#include <doctest.h>

#include "fixtures.hpp"
#include "liftcg/compressor.hpp"
#include "liftcg/oracle.hpp"

using namespace liftcg;
using namespace liftcg::testing;

TEST_CASE("example 1 classes") {
  const auto g = example1();
  CHECK(oracle::canonical_partition(g) == std::vector<NodeId>{0, 1, 1, 3});
  CHECK(oracle::canonical_string(g, 1) == oracle::canonical_string(g, 2));
  CHECK(oracle::canonical_string(g, 3).starts_with("(MUL_COS"));

  const auto shapes = scalar_weights({0, 0});
  const auto same = oracle::functional_equiv_probe(g, shapes, 1, 2, 10, 0);
  CHECK(same.equivalent_likely);
  CHECK(same.witness_trial == -1);
  const auto diff = oracle::functional_equiv_probe(g, shapes, 1, 3, 10, 0);
  CHECK_FALSE(diff.equivalent_likely);
  CHECK(diff.witness_trial == 0);
  REQUIRE(diff.witness.size() == 3);
  CHECK(diff.witness[0] == Tensor::scalar(1.0));
  const auto a = evaluate(g, diff.witness);
  CHECK(a[1][0] != a[3][0]);
}

TEST_CASE("functional but not structural equivalence") {
  // SUM(a, a) and SUM(a, IDENTITY(a)) agree for every weight list, yet their
  // terms differ, so neither the oracle nor the exact compressor merges them.
  const auto g = build_graph({Activation::constant_of({0.3}), Activation::of(ActivationKind::Identity),
                              Activation::of(ActivationKind::Sum), Activation::of(ActivationKind::Sum),
                              Activation::of(ActivationKind::Sum)},
                             {{0, 1, 0}, {0, 2, 1}, {0, 2, 1}, {0, 3, 1}, {1, 3, 1}, {2, 4, 2}, {3, 4, 3}}, {4});
  const auto shapes = scalar_weights({0, 0, 0});
  const auto part = oracle::canonical_partition(g);
  CHECK(part[2] != part[3]);
  CHECK(oracle::functional_equiv_probe(g, shapes, 2, 3, 25, 8).equivalent_likely);
  CHECK(compress_exact(g, shapes, {1, 12, 0}).report.merge_map[3] == 3);
  // Heights differ (1 and 2), so the buckets keep them apart in non-exact mode too.
  CHECK(compress_nonexact(g, shapes, {1, 12, 0}).report.merge_map[3] == 3);
}

TEST_CASE("constants compare bit for bit") {
  const auto g = build_graph({Activation::constant_of({0.1 + 0.2}), Activation::constant_of({0.3}),
                              Activation::constant_of({0.3}), Activation::of(ActivationKind::Sum)},
                             {{0, 3, 0}, {1, 3, 0}, {2, 3, 0}}, {3});
  const auto part = oracle::canonical_partition(g);
  CHECK(part[0] == 0);
  CHECK(part[1] == 1);
  CHECK(part[2] == 1);
  CHECK(oracle::canonical_string(g, 1).find("0x1.3333333333333p-2") != std::string::npos);
}

TEST_CASE("labels can be projected") {
  // TANH(w1 x) and TANH(w2 x) are distinct until labels 1 and 2 are identified.
  const auto g = build_graph({Activation::constant_of({0.5}), Activation::of(ActivationKind::TanhSum),
                              Activation::of(ActivationKind::TanhSum), Activation::of(ActivationKind::Sum)},
                             {{0, 1, 1}, {0, 2, 2}, {1, 3, 0}, {2, 3, 0}}, {3});
  CHECK(oracle::canonical_partition(g)[2] == 2);
  CHECK(oracle::canonical_partition(g, [](Label l) { return l == 2 ? Label{1} : l; })[2] == 1);
}

TEST_CASE("argument order matters only for ordered kinds") {
  for (ActivationKind k : {ActivationKind::SigmoidSum, ActivationKind::TanhSum, ActivationKind::ReluSum, ActivationKind::Sum,
                           ActivationKind::Avg, ActivationKind::Max, ActivationKind::MulCos}) {
    const auto g = build_graph({Activation::constant_of({0.2}), Activation::constant_of({0.7}), Activation::of(k),
                                Activation::of(k), Activation::of(ActivationKind::Sum)},
                               {{0, 2, 1}, {1, 2, 2}, {1, 3, 2}, {0, 3, 1}, {2, 4, 0}, {3, 4, 0}}, {4});
    const auto part = oracle::canonical_partition(g);
    CAPTURE(to_string(k));
    CHECK((part[3] == 2) == is_symmetric(k));
  }
}
