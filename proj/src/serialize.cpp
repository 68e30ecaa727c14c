#include "liftcg/serialize.hpp"

#include <fstream>
#include <sstream>

#include <json.hpp>

#include "liftcg/error.hpp"

namespace liftcg {

using nlohmann::json;

namespace {

[[noreturn]] void malformed(const std::string& what, const std::string& path) {
  throw Error(ErrorCode::MalformedInput, what, path);
}

const json& field(const json& obj, const char* name, const std::string& path) {
  if (!obj.is_object()) malformed("expected an object", path);
  auto it = obj.find(name);
  if (it == obj.end()) malformed(std::string("missing field '") + name + "'", path);
  return *it;
}

std::uint64_t as_index(const json& v, const std::string& path) {
  if (!v.is_number_unsigned() && !(v.is_number_integer() && v.get<std::int64_t>() >= 0)) {
    malformed("expected a non-negative integer", path);
  }
  return v.get<std::uint64_t>();
}

std::vector<double> as_doubles(const json& v, const std::string& path) {
  if (!v.is_array()) malformed("expected an array of numbers", path);
  std::vector<double> out;
  out.reserve(v.size());
  for (std::size_t i = 0; i < v.size(); ++i) {
    if (!v[i].is_number()) malformed("expected a number", path + "/" + std::to_string(i));
    out.push_back(v[i].get<double>());
  }
  return out;
}

}  // namespace

std::string serialize(const ComputationGraph& g, const WeightStore& w) {
  json doc;
  doc["value_dim"] = g.value_dim();

  json nodes = json::array();
  for (NodeId id = 0; id < g.node_count(); ++id) {
    const Activation& a = g.activation(id);
    json node{{"id", id}, {"activation", std::string(to_string(a.kind))}};
    if (a.kind == ActivationKind::Const) node["const"] = a.constant;
    nodes.push_back(std::move(node));
  }
  doc["nodes"] = std::move(nodes);

  json edges = json::array();
  for (const Edge& e : g.edges()) edges.push_back(json::array({e.child, e.parent, e.label}));
  doc["edges"] = std::move(edges);

  doc["outputs"] = std::vector<NodeId>(g.outputs().begin(), g.outputs().end());

  json weights = json::array();
  for (Label l = 0; l < w.size(); ++l) {
    const Tensor& t = w[l];
    json entry{{"shape", {t.rows, t.cols}}, {"data", t.data}, {"trainable", w.trainable(l)}};
    if (!w.key(l).empty()) entry["key"] = w.key(l);
    weights.push_back(std::move(entry));
  }
  doc["weights"] = std::move(weights);
  return doc.dump();
}

GraphBundle deserialize(std::string_view text) {
  json doc;
  try {
    doc = json::parse(text);
  } catch (const json::parse_error& e) {
    throw Error(ErrorCode::MalformedInput, e.what(), "byte " + std::to_string(e.byte));
  }

  const auto value_dim = as_index(field(doc, "value_dim", ""), "/value_dim");

  const json& jnodes = field(doc, "nodes", "");
  if (!jnodes.is_array()) malformed("expected an array", "/nodes");
  std::vector<Activation> nodes(jnodes.size());
  std::vector<bool> seen(jnodes.size(), false);
  for (std::size_t i = 0; i < jnodes.size(); ++i) {
    const std::string path = "/nodes/" + std::to_string(i);
    const json& jn = jnodes[i];
    const auto id = as_index(field(jn, "id", path), path + "/id");
    if (id >= nodes.size() || seen[id]) malformed("node ids must be a permutation of 0..n-1", path + "/id");
    seen[id] = true;
    const json& ja = field(jn, "activation", path);
    if (!ja.is_string()) malformed("expected a string", path + "/activation");
    const auto kind = parse_activation(ja.get<std::string>());
    if (!kind) malformed("unknown activation '" + ja.get<std::string>() + "'", path + "/activation");
    Activation a = Activation::of(*kind);
    if (*kind == ActivationKind::Const) a.constant = as_doubles(field(jn, "const", path), path + "/const");
    nodes[id] = std::move(a);
  }

  const json& jedges = field(doc, "edges", "");
  if (!jedges.is_array()) malformed("expected an array", "/edges");
  std::vector<Edge> edges;
  edges.reserve(jedges.size());
  for (std::size_t i = 0; i < jedges.size(); ++i) {
    const std::string path = "/edges/" + std::to_string(i);
    const json& je = jedges[i];
    if (!je.is_array() || je.size() != 3) malformed("expected [child, parent, label]", path);
    edges.push_back(Edge{static_cast<NodeId>(as_index(je[0], path + "/0")), static_cast<NodeId>(as_index(je[1], path + "/1")),
                         static_cast<Label>(as_index(je[2], path + "/2"))});
  }

  const json& jout = field(doc, "outputs", "");
  if (!jout.is_array()) malformed("expected an array", "/outputs");
  std::vector<NodeId> outputs;
  for (std::size_t i = 0; i < jout.size(); ++i) {
    outputs.push_back(static_cast<NodeId>(as_index(jout[i], "/outputs/" + std::to_string(i))));
  }

  const json& jw = field(doc, "weights", "");
  if (!jw.is_array() || jw.empty()) malformed("expected a non-empty array", "/weights");
  WeightStore store;
  for (std::size_t i = 0; i < jw.size(); ++i) {
    const std::string path = "/weights/" + std::to_string(i);
    const json& entry = jw[i];
    const json& shape = field(entry, "shape", path);
    if (!shape.is_array() || shape.size() != 2) malformed("expected [rows, cols]", path + "/shape");
    Tensor t;
    t.rows = as_index(shape[0], path + "/shape/0");
    t.cols = as_index(shape[1], path + "/shape/1");
    t.data = as_doubles(field(entry, "data", path), path + "/data");
    if (t.rows == 0 || t.cols == 0 || t.data.size() != t.rows * t.cols) malformed("data does not match shape", path);
    const json& tr = field(entry, "trainable", path);
    if (!tr.is_boolean()) malformed("expected a boolean", path + "/trainable");
    std::string key;
    if (auto it = entry.find("key"); it != entry.end()) {
      if (!it->is_string()) malformed("expected a string", path + "/key");
      key = it->get<std::string>();
    }
    if (i == 0) {
      if (t != Tensor::scalar(1.0) || tr.get<bool>()) malformed("weight 0 must be the fixed scalar identity", path);
      continue;
    }
    store.add(std::move(t), tr.get<bool>(), std::move(key));
  }

  for (std::size_t i = 0; i < edges.size(); ++i) {
    if (edges[i].label >= store.size()) {
      throw Error(ErrorCode::WeightIndexOutOfRange, "edge label has no weight", "/edges/" + std::to_string(i));
    }
  }

  return GraphBundle{ComputationGraph::build(std::move(nodes), std::move(edges), std::move(outputs), value_dim),
                     std::move(store)};
}

GraphBundle read_bundle(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::InvalidArgument, "cannot open file", path);
  std::ostringstream buf;
  buf << in.rdbuf();
  return deserialize(buf.str());
}

void write_bundle(const std::string& path, const ComputationGraph& g, const WeightStore& w) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(ErrorCode::InvalidArgument, "cannot write file", path);
  out << serialize(g, w) << '\n';
}

}  // namespace liftcg
