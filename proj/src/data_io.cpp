#include "liftcg/data_io.hpp"

#include <algorithm>
#include <fstream>
#include <istream>
#include <optional>
#include <ostream>
#include <set>
#include <sstream>
#include <tuple>
#include <unordered_map>
#include <unordered_set>

#include <json.hpp>

#include "liftcg/error.hpp"
#include "liftcg/random.hpp"

namespace liftcg::data {

using nlohmann::json;

namespace {

[[noreturn]] void parse_error(std::size_t line, const std::string& what) {
  throw Error(ErrorCode::ParseError, what, "line " + std::to_string(line));
}

std::string string_field(const json& obj, const char* name, std::size_t line) {
  auto it = obj.find(name);
  if (it == obj.end() || !it->is_string()) parse_error(line, std::string("missing string field '") + name + "'");
  return it->get<std::string>();
}

InputSample sample_from_json(const json& j, std::size_t line) {
  if (!j.is_object()) parse_error(line, "expected a JSON object");
  InputSample s;
  s.id = string_field(j, "id", line);
  auto nodes = j.find("nodes");
  if (nodes == j.end() || !nodes->is_array()) parse_error(line, "missing array 'nodes'");
  for (const json& jn : *nodes) {
    if (!jn.is_object()) parse_error(line, "node must be an object");
    SampleNode n;
    n.id = string_field(jn, "id", line);
    n.type = string_field(jn, "type", line);
    auto f = jn.find("features");
    if (f == jn.end() || !f->is_array()) parse_error(line, "node '" + n.id + "' lacks a features array");
    for (const json& x : *f) {
      if (!x.is_number()) parse_error(line, "non-numeric feature on node '" + n.id + "'");
      n.features.push_back(x.get<double>());
    }
    s.nodes.push_back(std::move(n));
  }
  auto edges = j.find("edges");
  if (edges != j.end()) {
    if (!edges->is_array()) parse_error(line, "'edges' must be an array");
    for (const json& je : *edges) {
      if (!je.is_object()) parse_error(line, "edge must be an object");
      SampleEdge e;
      e.src = string_field(je, "src", line);
      e.dst = string_field(je, "dst", line);
      if (auto t = je.find("type"); t != je.end()) {
        if (!t->is_string()) parse_error(line, "edge type must be a string");
        e.type = t->get<std::string>();
      }
      s.edges.push_back(std::move(e));
    }
  }
  auto label = j.find("label");
  if (label != j.end()) {
    if (!label->is_number()) parse_error(line, "label must be a number");
    s.label = label->get<double>();
  }
  return s;
}

json sample_to_json(const InputSample& s) {
  json nodes = json::array();
  for (const SampleNode& n : s.nodes) nodes.push_back({{"id", n.id}, {"type", n.type}, {"features", n.features}});
  json edges = json::array();
  for (const SampleEdge& e : s.edges) edges.push_back({{"src", e.src}, {"dst", e.dst}, {"type", e.type}});
  return json{{"id", s.id}, {"nodes", std::move(nodes)}, {"edges", std::move(edges)}, {"label", s.label}};
}

std::ifstream open(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::InvalidArgument, "cannot open file", path);
  return in;
}

}  // namespace

std::vector<InputSample> parse_graphs(std::istream& in) {
  std::vector<InputSample> out;
  std::string line;
  std::size_t lineno = 0;
  std::optional<std::size_t> dim;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    json j;
    try {
      j = json::parse(line);
    } catch (const json::parse_error& e) {
      parse_error(lineno, e.what());
    }
    InputSample s = sample_from_json(j, lineno);
    for (const SampleNode& n : s.nodes) {
      if (!dim) dim = n.features.size();
      if (n.features.size() != *dim) {
        throw Error(ErrorCode::DimMismatch,
                    "node '" + n.id + "' has " + std::to_string(n.features.size()) + " features, expected " +
                        std::to_string(*dim),
                    "line " + std::to_string(lineno));
      }
    }
    out.push_back(std::move(s));
  }
  return out;
}

std::vector<InputSample> load_graphs(const std::string& path) {
  auto in = open(path);
  return parse_graphs(in);
}

void write_graphs(std::ostream& out, const std::vector<InputSample>& samples) {
  for (const InputSample& s : samples) out << sample_to_json(s).dump() << '\n';
}

TripleStore parse_triples(std::istream& in) {
  TripleStore kb;
  std::unordered_set<std::string> entities, relations;
  std::set<std::tuple<std::string, std::string, std::string>> seen;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty() || line[0] == '#') continue;
    std::vector<std::string> cols;
    std::stringstream ss(line);
    std::string col;
    while (std::getline(ss, col, '\t')) cols.push_back(col);
    if (cols.size() != 4) parse_error(lineno, "expected 4 tab-separated columns, got " + std::to_string(cols.size()));
    Triple t{cols[0], cols[1], cols[2], 0};
    if (cols[3] == "1") {
      t.label = 1;
    } else if (cols[3] != "0") {
      parse_error(lineno, "label must be 0 or 1");
    }
    if (t.subject.empty() || t.relation.empty() || t.object.empty()) parse_error(lineno, "empty field");
    if (!seen.emplace(t.subject, t.relation, t.object).second) parse_error(lineno, "duplicate triple");
    for (const std::string* e : {&t.subject, &t.object}) {
      if (entities.insert(*e).second) kb.entities.push_back(*e);
    }
    if (relations.insert(t.relation).second) kb.relations.push_back(t.relation);
    kb.triples.push_back(std::move(t));
  }
  return kb;
}

TripleStore load_triples(const std::string& path) {
  auto in = open(path);
  return parse_triples(in);
}

void write_triples(std::ostream& out, const TripleStore& kb) {
  for (const Triple& t : kb.triples) out << t.subject << '\t' << t.relation << '\t' << t.object << '\t' << t.label << '\n';
}

DatasetManifest manifest_of(const std::vector<InputSample>& samples, std::string path) {
  DatasetManifest m;
  m.kind = DatasetKind::Graphs;
  m.path = std::move(path);
  m.samples = samples.size();
  double sum = 0.0;
  for (const InputSample& s : samples) {
    if (!s.nodes.empty()) m.feature_dim = s.nodes.front().features.size();
    m.positives += s.label >= 0.5;
    sum += s.label;
  }
  m.label_mean = samples.empty() ? 0.0 : sum / static_cast<double>(samples.size());
  return m;
}

DatasetManifest manifest_of(const TripleStore& kb, std::string path) {
  DatasetManifest m;
  m.kind = DatasetKind::Triples;
  m.path = std::move(path);
  m.samples = kb.triples.size();
  double sum = 0.0;
  for (const Triple& t : kb.triples) {
    m.positives += t.label == 1;
    sum += t.label;
  }
  m.label_mean = kb.triples.empty() ? 0.0 : sum / static_cast<double>(kb.triples.size());
  return m;
}

void featurize(std::vector<InputSample>& samples, std::size_t dim) {
  if (dim == 0) throw Error(ErrorCode::InvalidArgument, "feature dim must be positive");
  std::set<std::string> types;
  for (const InputSample& s : samples) {
    for (const SampleNode& n : s.nodes) types.insert(n.type);
  }
  std::unordered_map<std::string, std::size_t> index;
  for (const std::string& t : types) index.emplace(t, index.size());
  for (InputSample& s : samples) {
    for (SampleNode& n : s.nodes) {
      const std::size_t t = index.at(n.type);
      n.features.assign(dim, 0.0);
      n.features[t % dim] = 1.0 + static_cast<double>(t / dim);
    }
  }
}

namespace {

std::string pad(std::size_t i, int width = 2) {
  std::string s = std::to_string(i);
  return std::string(s.size() < static_cast<std::size_t>(width) ? width - s.size() : 0, '0') + s;
}

}  // namespace

InputSample star(std::size_t k, std::size_t dim, const std::string& id) {
  InputSample s;
  s.id = id;
  s.nodes.push_back({"c0", "C", {}});
  for (std::size_t i = 0; i < k; ++i) {
    s.nodes.push_back({"h" + std::to_string(i), "H", {}});
    s.edges.push_back({"c0", "h" + std::to_string(i), "single"});
  }
  std::vector<InputSample> one{std::move(s)};
  featurize(one, dim);
  return std::move(one.front());
}

std::vector<InputSample> gen_stars(std::size_t count, std::size_t max_leaves, std::size_t dim, std::uint64_t seed) {
  if (max_leaves == 0) throw Error(ErrorCode::InvalidArgument, "max_leaves must be positive");
  Rng rng(splitmix64(seed));
  std::vector<InputSample> out;
  for (std::size_t i = 0; i < count; ++i) {
    const std::size_t k = 1 + rng.below(max_leaves);
    InputSample s = star(k, dim, "star" + pad(i, 3));
    s.label = k % 2 == 0 ? 1.0 : 0.0;
    out.push_back(std::move(s));
  }
  featurize(out, dim);
  return out;
}

std::vector<InputSample> gen_trees(std::size_t count, std::size_t branching, std::size_t depth, std::size_t dim,
                                   std::uint64_t seed) {
  if (branching == 0) throw Error(ErrorCode::InvalidArgument, "branching must be positive");
  Rng rng(splitmix64(seed));
  std::vector<InputSample> out;
  for (std::size_t i = 0; i < count; ++i) {
    // Balanced tree; the label and the leaf type vary per sample, the shape does not.
    const bool odd_leaves = rng.below(2) == 1;
    InputSample s;
    s.id = "tree" + pad(i, 3);
    s.label = odd_leaves ? 1.0 : 0.0;
    std::vector<std::string> level{"n0"};
    s.nodes.push_back({"n0", "root", {}});
    std::size_t next = 1;
    for (std::size_t d = 0; d < depth; ++d) {
      std::vector<std::string> below;
      const bool last = d + 1 == depth;
      for (const std::string& parent : level) {
        for (std::size_t b = 0; b < branching; ++b) {
          std::string id = "n" + std::to_string(next++);
          s.nodes.push_back({id, last ? (odd_leaves ? "leafB" : "leafA") : "inner", {}});
          s.edges.push_back({parent, id, "child"});
          below.push_back(std::move(id));
        }
      }
      level = std::move(below);
    }
    out.push_back(std::move(s));
  }
  featurize(out, dim);
  return out;
}

std::vector<InputSample> gen_molecules(std::size_t count, std::size_t dim, std::uint64_t seed) {
  Rng rng(splitmix64(seed));
  std::vector<InputSample> out;
  for (std::size_t i = 0; i < count; ++i) {
    InputSample s;
    s.id = "mol" + pad(i, 3);
    std::vector<std::string> element;
    std::vector<int> free;
    auto add_atom = [&](const std::string& e) {
      element.push_back(e);
      free.push_back(e == "C" ? 4 : e == "N" ? 3 : e == "O" ? 2 : 1);
      return element.size() - 1;
    };
    auto bond = [&](std::size_t a, std::size_t b) {
      --free[a];
      --free[b];
      s.edges.push_back({element[a] + std::to_string(a), element[b] + std::to_string(b), "single"});
    };
    const std::size_t heavy = 1 + rng.below(6);
    add_atom("C");
    for (std::size_t a = 1; a < heavy; ++a) {
      const std::uint64_t r = rng.below(10);
      const std::size_t atom = add_atom(r < 7 ? "C" : r < 9 ? "O" : "N");
      std::vector<std::size_t> open;
      for (std::size_t b = 0; b < atom; ++b) {
        if (free[b] > 0) open.push_back(b);
      }
      if (open.empty()) {
        element.pop_back();
        free.pop_back();
        break;
      }
      bond(open[rng.below(open.size())], atom);
    }
    // Occasionally close a ring between two carbons that are not yet bonded.
    if (element.size() >= 5 && rng.below(3) == 0) {
      for (std::size_t a = 0; a < element.size(); ++a) {
        for (std::size_t b = a + 2; b < element.size(); ++b) {
          const std::string ia = element[a] + std::to_string(a), ib = element[b] + std::to_string(b);
          bool bonded = false;
          for (const SampleEdge& e : s.edges) bonded |= (e.src == ia && e.dst == ib) || (e.src == ib && e.dst == ia);
          if (!bonded && element[a] == "C" && element[b] == "C" && free[a] > 0 && free[b] > 0) {
            bond(a, b);
            goto ring_done;
          }
        }
      }
    }
  ring_done:
    const std::size_t heavy_count = element.size();
    for (std::size_t a = 0; a < heavy_count; ++a) {
      while (free[a] > 0) bond(a, add_atom("H"));
    }
    bool hetero = false;
    for (std::size_t a = 0; a < element.size(); ++a) {
      s.nodes.push_back({element[a] + std::to_string(a), element[a], {}});
      hetero |= element[a] == "O" || element[a] == "N";
    }
    s.label = hetero ? 1.0 : 0.0;
    out.push_back(std::move(s));
  }
  featurize(out, dim);
  return out;
}

TripleStore gen_kinships(std::size_t entities, std::size_t negatives, std::uint64_t seed) {
  if (entities < 4) throw Error(ErrorCode::InvalidArgument, "need at least 4 entities");
  Rng rng(splitmix64(seed));
  TripleStore kb;
  std::vector<bool> male(entities);
  for (std::size_t i = 0; i < entities; ++i) kb.entities.push_back("person" + pad(i));
  // First generation: couples (2c, 2c+1); the rest are their children.
  const std::size_t couples = std::max<std::size_t>(1, entities / 5);
  for (std::size_t i = 0; i < entities; ++i) male[i] = i < 2 * couples ? i % 2 == 0 : rng.below(2) == 0;
  std::vector<std::vector<std::size_t>> children(couples);
  for (std::size_t i = 2 * couples; i < entities; ++i) children[rng.below(couples)].push_back(i);

  std::set<std::tuple<std::string, std::string, std::string>> seen;
  std::unordered_set<std::string> relations;
  auto add = [&](std::size_t s, const std::string& r, std::size_t o, int label) {
    if (!seen.emplace(kb.entities[s], r, kb.entities[o]).second) return false;
    if (relations.insert(r).second) kb.relations.push_back(r);
    kb.triples.push_back({kb.entities[s], r, kb.entities[o], label});
    return true;
  };
  for (std::size_t c = 0; c < couples; ++c) {
    const std::size_t h = 2 * c, w = 2 * c + 1;
    add(h, "husband", w, 1);
    add(w, "wife", h, 1);
    for (std::size_t k : children[c]) {
      add(h, "father", k, 1);
      add(w, "mother", k, 1);
      add(k, male[k] ? "son" : "daughter", h, 1);
      add(k, male[k] ? "son" : "daughter", w, 1);
      for (std::size_t j : children[c]) {
        if (j != k) add(k, male[k] ? "brother" : "sister", j, 1);
      }
    }
  }
  const std::vector<std::string> rels = kb.relations;
  std::size_t made = 0;
  for (std::size_t attempt = 0; made < negatives && attempt < 100 * (negatives + 1); ++attempt) {
    const std::size_t s = rng.below(entities), o = rng.below(entities);
    if (s == o) continue;
    made += add(s, rels[rng.below(rels.size())], o, 0);
  }
  // Declare entities in order of first appearance, as parse_triples does.
  std::unordered_set<std::string> named;
  kb.entities.clear();
  for (const Triple& t : kb.triples) {
    for (const std::string* e : {&t.subject, &t.object}) {
      if (named.insert(*e).second) kb.entities.push_back(*e);
    }
  }
  return kb;
}

}  // namespace liftcg::data
