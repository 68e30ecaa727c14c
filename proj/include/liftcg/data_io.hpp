#pragma once

#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

#include "liftcg/templates.hpp"

namespace liftcg::data {

enum class DatasetKind { Graphs, Triples };

struct DatasetManifest {
  DatasetKind kind = DatasetKind::Graphs;
  std::string path;
  std::size_t samples = 0;
  std::size_t feature_dim = 0;
  std::size_t positives = 0;  // labels >= 0.5
  double label_mean = 0.0;
};

// One JSON object per line: {"id", "nodes":[{"id","type","features"}],
// "edges":[{"src","dst","type"}], "label"}. Blank lines are skipped.
// Throws ParseError naming the line, or DimMismatch when feature lengths vary.
std::vector<InputSample> parse_graphs(std::istream& in);
std::vector<InputSample> load_graphs(const std::string& path);
void write_graphs(std::ostream& out, const std::vector<InputSample>& samples);

// Tab-separated subject, relation, object, label. Entities and relations are
// declared in order of first appearance. Throws ParseError naming the line
// (wrong column count, bad label, duplicate (s, r, o)).
TripleStore parse_triples(std::istream& in);
TripleStore load_triples(const std::string& path);
void write_triples(std::ostream& out, const TripleStore& kb);

DatasetManifest manifest_of(const std::vector<InputSample>& samples, std::string path = {});
DatasetManifest manifest_of(const TripleStore& kb, std::string path = {});

// Replaces node features with an encoding of the node type. Types are indexed
// in sorted order over the whole dataset; type t becomes a one-hot vector at
// position t mod dim with value 1 + t / dim, so distinct types stay distinct
// and non-zero even when dim is smaller than the number of types.
void featurize(std::vector<InputSample>& samples, std::size_t dim);

std::vector<InputSample> gen_stars(std::size_t count, std::size_t max_leaves, std::size_t dim, std::uint64_t seed);
std::vector<InputSample> gen_trees(std::size_t count, std::size_t branching, std::size_t depth, std::size_t dim,
                                   std::uint64_t seed);
// Small organic-looking molecules (C/N/O skeletons saturated with H).
std::vector<InputSample> gen_molecules(std::size_t count, std::size_t dim, std::uint64_t seed);
// Kinship-style knowledge base over `entities` people, with positive triples
// from generated family structure and labeled negatives. No duplicate (s, r, o).
TripleStore gen_kinships(std::size_t entities, std::size_t negatives, std::uint64_t seed);

// The star K_{1,k}: one center, k leaves, typed like a CH_k molecule.
InputSample star(std::size_t k, std::size_t dim, const std::string& id = "star");

}  // namespace liftcg::data
