#pragma once

// Unfolding of convolutional model templates over input samples.
//
// Per layer i and sample node v the message-passing templates build
//   conv(u -> v)  = C_W1(h(u))                 one node per directed edge
//   agg(v)        = A over conv(u -> v)        omitted for isolated nodes
//   h(v)          = C_W2(h(v) at i-1, agg(v))  SIGMOID_SUM of two weighted terms
// with CONST leaves holding the sample features as layer 0, an AVG readout
// over the last layer, and a SIGMOID_SUM output projecting to one value.
// Weights are allocated in the store by string key (layer, role, edge type),
// so unfolding many samples against one store shares parameters.

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "liftcg/graph.hpp"

namespace liftcg {

struct SampleNode {
  std::string id;
  std::string type;
  std::vector<double> features;

  bool operator==(const SampleNode&) const = default;
};

struct SampleEdge {
  std::string src;
  std::string dst;
  std::string type;

  bool operator==(const SampleEdge&) const = default;
};

struct InputSample {
  std::string id;
  std::vector<SampleNode> nodes;
  std::vector<SampleEdge> edges;  // undirected
  double label = 0.0;

  bool operator==(const InputSample&) const = default;
};

struct Triple {
  std::string subject;
  std::string relation;
  std::string object;
  int label = 1;

  bool operator==(const Triple&) const = default;
};

struct TripleStore {
  std::vector<std::string> entities;
  std::vector<std::string> relations;
  std::vector<Triple> triples;

  bool operator==(const TripleStore&) const = default;
};

enum class Model { Gcn, Sage, Gin, Graphlets, Kbe };

std::string_view to_string(Model m);
std::optional<Model> parse_model(std::string_view name);

struct TemplateConfig {
  Model model = Model::Gcn;
  int layers = 2;
  std::size_t value_dim = 1;
  bool edge_typed_weights = false;
  std::uint64_t seed = 0;

  // GIN: 5 layers, GCN/SAGE/graphlets: 2, KBE: 1 propagation layer.
  static TemplateConfig defaults(Model m, std::size_t value_dim = 1, std::uint64_t seed = 0);
};

// Dispatches on cfg.model (KBE is rejected here; use unfold_kbe).
// Throws EmptySample, UnknownEdgeType, InvalidArgument, DimMismatch.
ComputationGraph unfold(const InputSample& sample, const TemplateConfig& cfg, WeightStore& store);

// GCN (AVG pooling) and SAGE (MAX pooling).
ComputationGraph unfold_gcn(const InputSample& sample, const TemplateConfig& cfg, WeightStore& store);

// GIN: agg(v) = SUM of neighbor states and the own state over identity edges,
// followed by a two-node MLP (RELU_SUM, then SUM with a trainable weight).
ComputationGraph unfold_gin(const InputSample& sample, const TemplateConfig& cfg, WeightStore& store);

// 3-graphlets: for each unordered pair {u, w} of neighbors of v, a node
// SIGMOID_SUM(Wa h(u), Wb h(v), Wa h(w)); AVG over pairs. Nodes of degree < 2
// use the GCN rule.
ComputationGraph unfold_graphlets(const InputSample& sample, const TemplateConfig& cfg, WeightStore& store);

// Knowledge-base embedding: an embedding chain per entity and relation, GCN
// propagation over entity co-occurrence in `facts`, and a scoring chain
// SIGMOID_SUM(Ws e_s, Wr e_r, Wo e_o) -> SIGMOID_SUM -> scalar per query.
// Outputs follow the query order. Throws EmptyKB.
ComputationGraph unfold_kbe(const TripleStore& kb, const TemplateConfig& cfg, WeightStore& store);
ComputationGraph unfold_kbe(const TripleStore& facts, std::span<const Triple> queries, const TemplateConfig& cfg,
                            WeightStore& store);

// Allocates every weight the dataset needs, in sorted key order, so that
// labels do not depend on sample order. Seals nothing.
void prepare_store(std::span<const InputSample> samples, const TemplateConfig& cfg, WeightStore& store);
void prepare_store(const TripleStore& kb, const TemplateConfig& cfg, WeightStore& store);

}  // namespace liftcg
