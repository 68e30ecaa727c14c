#include "liftcg/templates.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <set>
#include <unordered_map>

#include "liftcg/error.hpp"

namespace liftcg {

namespace {

class Builder {
 public:
  NodeId add(Activation a) {
    nodes_.push_back(std::move(a));
    return static_cast<NodeId>(nodes_.size() - 1);
  }
  NodeId add(ActivationKind k) { return add(Activation::of(k)); }
  void link(NodeId child, NodeId parent, Label label) { edges_.push_back(Edge{child, parent, label}); }
  void output(NodeId id) { outputs_.push_back(id); }

  ComputationGraph build(std::size_t dim) {
    return ComputationGraph::build(std::move(nodes_), std::move(edges_), std::move(outputs_), dim);
  }

 private:
  std::vector<Activation> nodes_;
  std::vector<Edge> edges_;
  std::vector<NodeId> outputs_;
};

// Resolves weights by key; typed-edge keys missing from a sealed store are
// reported as unknown edge types.
class Weights {
 public:
  Weights(WeightStore& store, const TemplateConfig& cfg) : store_(store), cfg_(cfg) {}

  Label square(const std::string& key) { return get(key, cfg_.value_dim, cfg_.value_dim); }
  Label shaped(const std::string& key, std::size_t rows, std::size_t cols) { return get(key, rows, cols); }

  Label conv(int layer, const std::string& edge_type, const std::string& prefix = "") {
    if (!cfg_.edge_typed_weights) return square(prefix + layer_key(layer, "W1"));
    const std::string key = prefix + layer_key(layer, "W1") + "/" + edge_type;
    if (store_.sealed() && !store_.find(key)) {
      throw Error(ErrorCode::UnknownEdgeType, "edge type '" + edge_type + "' has no registered weight", key);
    }
    return square(key);
  }

  static std::string layer_key(int layer, const char* role) { return "L" + std::to_string(layer) + "/" + role; }

 private:
  Label get(const std::string& key, std::size_t rows, std::size_t cols) {
    return store_.ensure(key, rows, cols, cfg_.seed);
  }

  WeightStore& store_;
  const TemplateConfig& cfg_;
};

struct Incoming {
  std::size_t source;
  std::string type;
};

struct Topology {
  std::vector<std::vector<Incoming>> in;  // per node, in sample edge order
};

Topology index_sample(const InputSample& sample, const TemplateConfig& cfg) {
  if (sample.nodes.empty()) throw Error(ErrorCode::EmptySample, "sample has no nodes", sample.id);
  std::unordered_map<std::string, std::size_t> index;
  for (std::size_t i = 0; i < sample.nodes.size(); ++i) {
    const SampleNode& n = sample.nodes[i];
    if (!index.emplace(n.id, i).second) {
      throw Error(ErrorCode::InvalidArgument, "duplicate node id '" + n.id + "'", sample.id);
    }
    if (n.features.size() != cfg.value_dim) {
      throw Error(ErrorCode::DimMismatch,
                  "node '" + n.id + "' has " + std::to_string(n.features.size()) + " features, expected " +
                      std::to_string(cfg.value_dim),
                  sample.id);
    }
    for (double f : n.features) {
      if (!std::isfinite(f)) throw Error(ErrorCode::InvalidArgument, "non-finite feature on '" + n.id + "'", sample.id);
    }
  }
  Topology t;
  t.in.resize(sample.nodes.size());
  for (const SampleEdge& e : sample.edges) {
    auto s = index.find(e.src);
    auto d = index.find(e.dst);
    if (s == index.end() || d == index.end()) {
      throw Error(ErrorCode::InvalidArgument, "edge " + e.src + "-" + e.dst + " references a missing node", sample.id);
    }
    t.in[d->second].push_back(Incoming{s->second, e.type});
    if (s->second != d->second) t.in[s->second].push_back(Incoming{d->second, e.type});
  }
  return t;
}

std::vector<NodeId> add_leaves(Builder& b, const InputSample& sample) {
  std::vector<NodeId> h;
  h.reserve(sample.nodes.size());
  for (const SampleNode& n : sample.nodes) h.push_back(b.add(Activation::constant_of(n.features)));
  return h;
}

// One message-passing layer with unary SIGMOID_SUM convolutions, the given
// pooling and the SIGMOID_SUM update. `prefix` namespaces the weight keys.
std::vector<NodeId> conv_layer(Builder& b, Weights& w, const std::vector<std::vector<Incoming>>& in,
                               const std::vector<NodeId>& h, int layer, ActivationKind pooling,
                               const std::string& prefix) {
  const std::size_t n = h.size();
  std::vector<std::vector<NodeId>> convs(n);
  for (std::size_t v = 0; v < n; ++v) {
    for (const Incoming& e : in[v]) {
      const NodeId c = b.add(ActivationKind::SigmoidSum);
      b.link(h[e.source], c, w.conv(layer, e.type, prefix));
      convs[v].push_back(c);
    }
  }
  std::vector<std::optional<NodeId>> agg(n);
  for (std::size_t v = 0; v < n; ++v) {
    if (convs[v].empty()) continue;
    agg[v] = b.add(pooling);
    for (NodeId c : convs[v]) b.link(c, *agg[v], kIdentityLabel);
  }
  const Label self_w = w.square(prefix + Weights::layer_key(layer, "W2"));
  const Label agg_w = w.square(prefix + Weights::layer_key(layer, "W3"));
  std::vector<NodeId> next(n);
  for (std::size_t v = 0; v < n; ++v) {
    next[v] = b.add(ActivationKind::SigmoidSum);
    b.link(h[v], next[v], self_w);
    if (agg[v]) b.link(*agg[v], next[v], agg_w);
  }
  return next;
}

void add_readout(Builder& b, Weights& w, const std::vector<NodeId>& h, std::size_t dim) {
  const NodeId readout = b.add(ActivationKind::Avg);
  for (NodeId x : h) b.link(x, readout, kIdentityLabel);
  const NodeId out = b.add(ActivationKind::SigmoidSum);
  b.link(readout, out, w.shaped("readout/out", 1, dim));
  b.output(out);
}

void check_layers(const TemplateConfig& cfg) {
  if (cfg.layers < 1) throw Error(ErrorCode::InvalidArgument, "layers must be positive");
  if (cfg.value_dim < 1) throw Error(ErrorCode::InvalidArgument, "value_dim must be positive");
}

}  // namespace

std::string_view to_string(Model m) {
  switch (m) {
    case Model::Gcn: return "gcn";
    case Model::Sage: return "sage";
    case Model::Gin: return "gin";
    case Model::Graphlets: return "graphlets";
    case Model::Kbe: return "kbe";
  }
  return "?";
}

std::optional<Model> parse_model(std::string_view name) {
  for (Model m : {Model::Gcn, Model::Sage, Model::Gin, Model::Graphlets, Model::Kbe}) {
    if (to_string(m) == name) return m;
  }
  return std::nullopt;
}

TemplateConfig TemplateConfig::defaults(Model m, std::size_t value_dim, std::uint64_t seed) {
  TemplateConfig c;
  c.model = m;
  c.value_dim = value_dim;
  c.seed = seed;
  c.layers = m == Model::Gin ? 5 : m == Model::Kbe ? 1 : 2;
  return c;
}

ComputationGraph unfold(const InputSample& sample, const TemplateConfig& cfg, WeightStore& store) {
  switch (cfg.model) {
    case Model::Gcn:
    case Model::Sage: return unfold_gcn(sample, cfg, store);
    case Model::Gin: return unfold_gin(sample, cfg, store);
    case Model::Graphlets: return unfold_graphlets(sample, cfg, store);
    case Model::Kbe: break;
  }
  throw Error(ErrorCode::InvalidArgument, "the KBE template unfolds triple stores, not graph samples");
}

ComputationGraph unfold_gcn(const InputSample& sample, const TemplateConfig& cfg, WeightStore& store) {
  check_layers(cfg);
  const Topology topo = index_sample(sample, cfg);
  Builder b;
  Weights w(store, cfg);
  std::vector<NodeId> h = add_leaves(b, sample);
  const ActivationKind pooling = cfg.model == Model::Sage ? ActivationKind::Max : ActivationKind::Avg;
  for (int layer = 1; layer <= cfg.layers; ++layer) h = conv_layer(b, w, topo.in, h, layer, pooling, "");
  add_readout(b, w, h, cfg.value_dim);
  return b.build(cfg.value_dim);
}

ComputationGraph unfold_gin(const InputSample& sample, const TemplateConfig& cfg, WeightStore& store) {
  check_layers(cfg);
  const Topology topo = index_sample(sample, cfg);
  Builder b;
  Weights w(store, cfg);
  std::vector<NodeId> h = add_leaves(b, sample);
  const std::size_t n = h.size();
  for (int layer = 1; layer <= cfg.layers; ++layer) {
    std::vector<NodeId> agg(n);
    for (std::size_t v = 0; v < n; ++v) {
      agg[v] = b.add(ActivationKind::Sum);
      for (const Incoming& e : topo.in[v]) b.link(h[e.source], agg[v], kIdentityLabel);
      b.link(h[v], agg[v], kIdentityLabel);
    }
    const Label hidden_w = w.square(Weights::layer_key(layer, "mlp1"));
    const Label out_w = w.square(Weights::layer_key(layer, "mlp2"));
    std::vector<NodeId> next(n);
    for (std::size_t v = 0; v < n; ++v) {
      const NodeId hidden = b.add(ActivationKind::ReluSum);
      b.link(agg[v], hidden, hidden_w);
      next[v] = b.add(ActivationKind::Sum);
      b.link(hidden, next[v], out_w);
    }
    h = std::move(next);
  }
  add_readout(b, w, h, cfg.value_dim);
  return b.build(cfg.value_dim);
}

ComputationGraph unfold_graphlets(const InputSample& sample, const TemplateConfig& cfg, WeightStore& store) {
  check_layers(cfg);
  const Topology topo = index_sample(sample, cfg);
  Builder b;
  Weights w(store, cfg);
  std::vector<NodeId> h = add_leaves(b, sample);
  const std::size_t n = h.size();
  for (int layer = 1; layer <= cfg.layers; ++layer) {
    const Label pair_w = w.square(Weights::layer_key(layer, "Wa"));
    const Label center_w = w.square(Weights::layer_key(layer, "Wb"));
    std::vector<std::vector<NodeId>> convs(n);
    for (std::size_t v = 0; v < n; ++v) {
      const auto& nb = topo.in[v];
      if (nb.size() >= 2) {
        for (std::size_t a = 0; a < nb.size(); ++a) {
          for (std::size_t c = a + 1; c < nb.size(); ++c) {
            const NodeId g = b.add(ActivationKind::SigmoidSum);
            b.link(h[nb[a].source], g, pair_w);
            b.link(h[v], g, center_w);
            b.link(h[nb[c].source], g, pair_w);
            convs[v].push_back(g);
          }
        }
      } else {
        for (const Incoming& e : nb) {
          const NodeId c = b.add(ActivationKind::SigmoidSum);
          b.link(h[e.source], c, w.conv(layer, e.type));
          convs[v].push_back(c);
        }
      }
    }
    std::vector<std::optional<NodeId>> agg(n);
    for (std::size_t v = 0; v < n; ++v) {
      if (convs[v].empty()) continue;
      agg[v] = b.add(ActivationKind::Avg);
      for (NodeId c : convs[v]) b.link(c, *agg[v], kIdentityLabel);
    }
    const Label self_w = w.square(Weights::layer_key(layer, "W2"));
    const Label agg_w = w.square(Weights::layer_key(layer, "W3"));
    std::vector<NodeId> next(n);
    for (std::size_t v = 0; v < n; ++v) {
      next[v] = b.add(ActivationKind::SigmoidSum);
      b.link(h[v], next[v], self_w);
      if (agg[v]) b.link(*agg[v], next[v], agg_w);
    }
    h = std::move(next);
  }
  add_readout(b, w, h, cfg.value_dim);
  return b.build(cfg.value_dim);
}

ComputationGraph unfold_kbe(const TripleStore& kb, const TemplateConfig& cfg, WeightStore& store) {
  return unfold_kbe(kb, kb.triples, cfg, store);
}

ComputationGraph unfold_kbe(const TripleStore& facts, std::span<const Triple> queries, const TemplateConfig& cfg,
                            WeightStore& store) {
  check_layers(cfg);
  if (facts.entities.empty() || queries.empty()) throw Error(ErrorCode::EmptyKB, "knowledge base has no triples");
  std::unordered_map<std::string, std::size_t> entity, relation;
  for (std::size_t i = 0; i < facts.entities.size(); ++i) entity.emplace(facts.entities[i], i);
  for (std::size_t i = 0; i < facts.relations.size(); ++i) relation.emplace(facts.relations[i], i);
  auto lookup = [](const auto& map, const std::string& name, const char* what) {
    auto it = map.find(name);
    if (it == map.end()) throw Error(ErrorCode::InvalidArgument, std::string("undeclared ") + what + " '" + name + "'");
    return it->second;
  };

  const std::size_t d = cfg.value_dim;
  Builder b;
  Weights w(store, cfg);

  auto embedding = [&](const std::string& key) {
    const NodeId leaf = b.add(Activation::constant_of({1.0}));
    const NodeId e = b.add(ActivationKind::Identity);
    b.link(leaf, e, w.shaped(key, d, 1));
    return e;
  };
  std::vector<NodeId> h;
  for (const auto& name : facts.entities) h.push_back(embedding("ent/" + name));
  std::vector<NodeId> rel;
  for (const auto& name : facts.relations) rel.push_back(embedding("rel/" + name));

  // Co-occurrence graph: one undirected edge per linked entity pair, in order of first appearance.
  std::vector<std::vector<Incoming>> in(h.size());
  std::set<std::pair<std::size_t, std::size_t>> seen;
  for (const Triple& t : facts.triples) {
    const std::size_t s = lookup(entity, t.subject, "entity");
    const std::size_t o = lookup(entity, t.object, "entity");
    lookup(relation, t.relation, "relation");
    if (s == o) continue;
    if (!seen.emplace(std::min(s, o), std::max(s, o)).second) continue;
    in[o].push_back(Incoming{s, {}});
    in[s].push_back(Incoming{o, {}});
  }

  TemplateConfig untyped = cfg;
  untyped.edge_typed_weights = false;
  Weights kb_w(store, untyped);
  for (int layer = 1; layer <= cfg.layers; ++layer) {
    h = conv_layer(b, kb_w, in, h, layer, ActivationKind::Avg, "kb/");
  }

  const Label ws = w.square("score/Ws");
  const Label wr = w.square("score/Wr");
  const Label wo = w.square("score/Wo");
  const Label hidden_w = w.square("score/mlp1");
  const Label out_w = w.shaped("score/mlp2", 1, d);
  for (const Triple& t : queries) {
    const std::size_t s = lookup(entity, t.subject, "entity");
    const std::size_t r = lookup(relation, t.relation, "relation");
    const std::size_t o = lookup(entity, t.object, "entity");
    const NodeId score = b.add(ActivationKind::SigmoidSum);
    b.link(h[s], score, ws);
    b.link(rel[r], score, wr);
    b.link(h[o], score, wo);
    const NodeId hidden = b.add(ActivationKind::SigmoidSum);
    b.link(score, hidden, hidden_w);
    const NodeId out = b.add(ActivationKind::SigmoidSum);
    b.link(hidden, out, out_w);
    b.output(out);
  }
  return b.build(d);
}

namespace {

void adopt_sorted(const WeightStore& scratch, const TemplateConfig& cfg, WeightStore& store) {
  std::map<std::string, std::pair<std::size_t, std::size_t>> shapes;
  for (Label l = 1; l < scratch.size(); ++l) shapes.emplace(scratch.key(l), std::pair{scratch[l].rows, scratch[l].cols});
  for (const auto& [key, shape] : shapes) store.ensure(key, shape.first, shape.second, cfg.seed);
}

}  // namespace

void prepare_store(std::span<const InputSample> samples, const TemplateConfig& cfg, WeightStore& store) {
  WeightStore scratch;
  for (const InputSample& s : samples) unfold(s, cfg, scratch);
  adopt_sorted(scratch, cfg, store);
}

void prepare_store(const TripleStore& kb, const TemplateConfig& cfg, WeightStore& store) {
  WeightStore scratch;
  unfold_kbe(kb, cfg, scratch);
  adopt_sorted(scratch, cfg, store);
}

}  // namespace liftcg
