// liftcg: unfold, compress, verify, benchmark and train lifted computation graphs.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <iostream>
#include <sstream>
#include <thread>

#include <CLI11.hpp>

#include "liftcg/compressor.hpp"
#include "liftcg/data_io.hpp"
#include "liftcg/error.hpp"
#include "liftcg/serialize.hpp"
#include "liftcg/templates.hpp"
#include "liftcg/training.hpp"
#include "liftcg/verify.hpp"

using namespace liftcg;

namespace {

using Clock = std::chrono::steady_clock;

unsigned thread_cap() {
  unsigned n = std::max(1u, std::thread::hardware_concurrency());
  if (const char* env = std::getenv("LIFTCG_THREADS")) {
    char* end = nullptr;
    const long v = std::strtol(env, &end, 10);
    if (end != env && *end == '\0' && v >= 1) n = std::min<unsigned>(n, static_cast<unsigned>(v));
  }
  return n;
}

template <class Fn>
void parallel_for(std::size_t n, unsigned threads, Fn&& fn) {
  const std::size_t t = std::min<std::size_t>(threads, n);
  if (t <= 1) {
    for (std::size_t i = 0; i < n; ++i) fn(i);
    return;
  }
  std::vector<std::thread> pool;
  std::vector<std::exception_ptr> errors(t);
  for (std::size_t w = 0; w < t; ++w) {
    pool.emplace_back([&, w] {
      try {
        for (std::size_t i = w * n / t; i < (w + 1) * n / t; ++i) fn(i);
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

void write_text(const std::string& path, const std::string& text) {
  if (path.empty() || path == "-") {
    std::cout << text;
    if (!text.empty() && text.back() != '\n') std::cout << '\n';
    return;
  }
  std::ofstream out(path);
  if (!out) throw Error(ErrorCode::InvalidArgument, "cannot write file", path);
  out << text;
  if (!text.empty() && text.back() != '\n') out << '\n';
}

Model model_of(const std::string& name) {
  auto m = parse_model(name);
  if (!m) throw Error(ErrorCode::InvalidArgument, "unknown template '" + name + "'");
  return *m;
}

// Loads samples and re-encodes features from node types when their length
// differs from `dim` (0 keeps the file's features).
std::vector<InputSample> load_samples(const std::string& path, std::size_t& dim) {
  auto samples = data::load_graphs(path);
  if (samples.empty()) throw Error(ErrorCode::EmptySample, "dataset has no samples", path);
  const std::size_t file_dim = data::manifest_of(samples).feature_dim;
  if (dim == 0) dim = file_dim;
  if (dim != file_dim) data::featurize(samples, dim);
  return samples;
}

TemplateConfig template_config(Model m, std::size_t dim, int layers, bool typed, std::uint64_t seed) {
  TemplateConfig cfg = TemplateConfig::defaults(m, dim, seed);
  if (layers > 0) cfg.layers = layers;
  cfg.edge_typed_weights = typed;
  return cfg;
}

std::vector<int> parse_range(const std::string& text) {
  std::vector<int> out;
  std::stringstream ss(text);
  std::string part;
  while (std::getline(ss, part, ',')) {
    const auto dots = part.find("..");
    try {
      if (dots == std::string::npos) {
        out.push_back(std::stoi(part));
      } else {
        const int lo = std::stoi(part.substr(0, dots));
        const int hi = std::stoi(part.substr(dots + 2));
        if (hi < lo) throw Error(ErrorCode::InvalidArgument, "empty range '" + part + "'");
        for (int v = lo; v <= hi; ++v) out.push_back(v);
      }
    } catch (const std::logic_error&) {
      throw Error(ErrorCode::InvalidArgument, "bad number list '" + text + "'");
    }
  }
  if (out.empty()) throw Error(ErrorCode::InvalidArgument, "empty number list");
  return out;
}

std::string fmt(double x) {
  if (!std::isfinite(x)) return "";
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.6g", x);
  return buf;
}

double seconds_since(Clock::time_point t) { return std::chrono::duration<double>(Clock::now() - t).count(); }

// ---------------------------------------------------------------- unfold

struct UnfoldArgs {
  std::string model = "gcn";
  int layers = 0;
  std::size_t dim = 0;
  bool edge_typed = false;
  std::string input;
  std::string kb;
  std::size_t index = 0;
  std::string out;
  std::uint64_t seed = 0;
};

int run_unfold(const UnfoldArgs& a) {
  const Model m = model_of(a.model);
  WeightStore store;
  if (m == Model::Kbe) {
    if (a.kb.empty()) throw Error(ErrorCode::InvalidArgument, "--kb is required for the kbe template");
    const TripleStore kb = data::load_triples(a.kb);
    const TemplateConfig cfg = template_config(m, a.dim == 0 ? 1 : a.dim, a.layers, false, a.seed);
    prepare_store(kb, cfg, store);
    const ComputationGraph g = unfold_kbe(kb, cfg, store);
    write_text(a.out, serialize(g, store));
    return 0;
  }
  if (a.input.empty()) throw Error(ErrorCode::InvalidArgument, "--input is required");
  std::size_t dim = a.dim;
  const auto samples = load_samples(a.input, dim);
  if (a.index >= samples.size()) throw Error(ErrorCode::InvalidArgument, "--index past the last sample");
  const TemplateConfig cfg = template_config(m, dim, a.layers, a.edge_typed, a.seed);
  std::span<const InputSample> one(&samples[a.index], 1);
  prepare_store(one, cfg, store);
  const ComputationGraph g = unfold(samples[a.index], cfg, store);
  write_text(a.out, serialize(g, store));
  return 0;
}

// ---------------------------------------------------------------- compress

struct CompressArgs {
  std::string mode = "exact";
  int inits = 1;
  int digits = 12;
  std::uint64_t seed = 0;
  std::string in;
  std::string out;
  std::string report;
};

int run_compress(const CompressArgs& a) {
  const GraphBundle b = read_bundle(a.in);
  const FingerprintParams p{a.inits, a.digits, a.seed};
  const Compressed c = a.mode == "exact" ? compress_exact(b.graph, b.weights, p) : compress_nonexact(b.graph, b.weights, p);
  write_text(a.out, serialize(c.graph, b.weights));
  if (!a.report.empty()) write_text(a.report, report_to_json(c.report));
  return 0;
}

// ---------------------------------------------------------------- verify

struct VerifyArgs {
  std::string original;
  std::string compressed;
  int trials = 10;
  double tol = 1e-12;
  std::uint64_t seed = 0;
};

int run_verify(const VerifyArgs& a) {
  const GraphBundle orig = read_bundle(a.original);
  const GraphBundle comp = read_bundle(a.compressed);
  if (orig.weights.size() != comp.weights.size()) {
    throw Error(ErrorCode::InvalidArgument, "bundles carry different weight lists");
  }
  for (Label l = 0; l < orig.weights.size(); ++l) {
    if (orig.weights[l].rows != comp.weights[l].rows || orig.weights[l].cols != comp.weights[l].cols) {
      throw Error(ErrorCode::DimensionMismatch, "weight shapes differ", "label " + std::to_string(l));
    }
  }
  const VerifyResult r = verify_outputs(orig.graph, comp.graph, orig.weights.tensors(), a.trials, a.tol, a.seed);
  std::printf("%s max_deviation=%.3e trials=%d\n", r.pass ? "PASS" : "FAIL", r.max_deviation, r.trials);
  if (!r.pass) {
    std::printf("witness trial=%d slot=%zu weights=[", *r.witness_trial, r.witness_slot);
    for (std::size_t l = 0; l < r.witness.size(); ++l) {
      std::printf("%s[", l ? "," : "");
      for (std::size_t i = 0; i < r.witness[l].data.size(); ++i) {
        std::printf("%s%.17g", i ? "," : "", r.witness[l].data[i]);
      }
      std::printf("]");
    }
    std::printf("]\n");
  }
  return 0;
}

// ---------------------------------------------------------------- bench

struct BenchArgs {
  std::string model = "graphlets";
  std::string dataset;
  std::string dims = "1";
  std::string digit_sweep = "1..15";
  std::string inits_sweep = "1";
  int layers = 0;
  int folds = 5;
  int steps = 100;
  int eval_reps = 5;
  std::uint64_t seed = 0;
  std::string out;
};

struct Sizes {
  std::size_t nodes = 0;
  std::size_t edges = 0;
};

double eval_seconds(const std::vector<ComputationGraph>& graphs, const WeightStore& w, int reps) {
  const auto t = Clock::now();
  for (int r = 0; r < reps; ++r) {
    for (const auto& g : graphs) (void)evaluate(g, w);
  }
  return seconds_since(t) / std::max(1, reps);
}

struct TrainSummary {
  double seconds = 0.0;
  double train_acc = 0.0;
  double test_acc = NAN;
};

TrainSummary train_summary(const std::vector<InputSample>& samples, const TemplateConfig& cfg, const TrainConfig& tc,
                           const CompressMode& mode) {
  TrainSummary s;
  if (tc.folds >= 2) {
    const CrossValidation cv = crossvalidate(samples, cfg, tc, mode);
    for (const auto& run : cv.runs) s.seconds += run.train_seconds / static_cast<double>(cv.runs.size());
    s.train_acc = cv.mean.train_accuracy;
    s.test_acc = cv.mean.test_accuracy;
  } else {
    const TrainTrace t = train(samples, cfg, tc, mode);
    s.seconds = t.train_seconds;
    s.train_acc = t.folds.front().train_accuracy;
  }
  return s;
}

int run_bench(const BenchArgs& a) {
  const Model m = model_of(a.model);
  if (m == Model::Kbe) throw Error(ErrorCode::InvalidArgument, "bench runs on graph datasets");
  if (a.dataset.empty()) throw Error(ErrorCode::InvalidArgument, "--dataset is required");
  const auto dims = parse_range(a.dims);
  const auto digits = parse_range(a.digit_sweep);
  const auto inits = parse_range(a.inits_sweep);
  for (int d : digits) {
    if (d < 1 || d > 17) throw Error(ErrorCode::InvalidArgument, "digits must lie in 1..17");
  }
  for (int n : inits) {
    if (n < 1) throw Error(ErrorCode::InvalidArgument, "inits must be positive");
  }
  for (int d : dims) {
    if (d < 1) throw Error(ErrorCode::InvalidArgument, "dims must be positive");
  }
  const unsigned threads = thread_cap();

  std::string csv =
      "template,dim,digits,inits,nodes_before,nodes_after,edges_before,edges_after,eval_time_orig,eval_time_comp,"
      "train_time_orig,train_time_comp,train_acc,test_acc,partitions_match_exact\n";
  for (int dim : dims) {
    std::size_t d = static_cast<std::size_t>(dim);
    const auto samples = load_samples(a.dataset, d);
    const TemplateConfig cfg = template_config(m, d, a.layers, false, a.seed);
    WeightStore store;
    prepare_store(samples, cfg, store);
    store.seal();

    std::vector<ComputationGraph> orig(samples.size());
    parallel_for(samples.size(), threads, [&](std::size_t i) { orig[i] = unfold(samples[i], cfg, store); });
    std::vector<std::vector<NodeId>> exact_part(samples.size());
    parallel_for(samples.size(), threads, [&](std::size_t i) {
      exact_part[i] = partition_of(compress_exact(orig[i], store, {1, 12, a.seed}).report);
    });
    Sizes before;
    for (const auto& g : orig) {
      before.nodes += g.node_count();
      before.edges += g.edge_count();
    }
    const double eval_orig = eval_seconds(orig, store, a.eval_reps);
    TrainConfig tc;
    tc.steps = a.steps;
    tc.folds = a.folds;
    tc.seed = a.seed;
    tc.threads = threads;
    const TrainSummary train_orig = train_summary(samples, cfg, tc, {});

    for (int n : inits) {
      for (int s : digits) {
        const FingerprintParams p{n, s, a.seed};
        std::vector<Compressed> comp(samples.size());
        parallel_for(samples.size(), threads, [&](std::size_t i) { comp[i] = compress_nonexact(orig[i], store, p); });
        Sizes after;
        bool match = true;
        std::vector<ComputationGraph> graphs;
        for (std::size_t i = 0; i < comp.size(); ++i) {
          after.nodes += comp[i].graph.node_count();
          after.edges += comp[i].graph.edge_count();
          match = match && partition_of(comp[i].report) == exact_part[i];
          graphs.push_back(comp[i].graph);
        }
        const double eval_comp = eval_seconds(graphs, store, a.eval_reps);
        const TrainSummary train_comp = train_summary(samples, cfg, tc, {CompressKind::NonExact, p});
        csv += std::string(to_string(m)) + "," + std::to_string(dim) + "," + std::to_string(s) + "," +
               std::to_string(n) + "," + std::to_string(before.nodes) + "," + std::to_string(after.nodes) + "," +
               std::to_string(before.edges) + "," + std::to_string(after.edges) + "," + fmt(eval_orig) + "," +
               fmt(eval_comp) + "," + fmt(train_orig.seconds) + "," + fmt(train_comp.seconds) + "," +
               fmt(train_comp.train_acc) + "," + fmt(train_comp.test_acc) + "," + (match ? "true" : "false") + "\n";
      }
    }
  }
  write_text(a.out, csv);
  return 0;
}

// ---------------------------------------------------------------- train

struct TrainArgs {
  std::string model = "gcn";
  std::string input;
  std::string kb;
  std::size_t dim = 0;
  int layers = 0;
  bool edge_typed = false;
  std::string compress = "none";
  int inits = 1;
  int digits = 12;
  int steps = 1000;
  double lr = 1e-3;
  int folds = 1;
  std::uint64_t seed = 0;
  std::string out_json;
  std::string out_csv;
};

int run_train(const TrainArgs& a) {
  const Model m = model_of(a.model);
  const auto kind = parse_compress_kind(a.compress);
  if (!kind) throw Error(ErrorCode::InvalidArgument, "--compress must be none, exact or nonexact");
  const CompressMode mode{*kind, {a.inits, a.digits, a.seed}};
  TrainConfig tc;
  tc.steps = a.steps;
  tc.lr = a.lr;
  tc.folds = a.folds;
  tc.seed = a.seed;
  tc.threads = thread_cap();
  if (tc.steps < 1) throw Error(ErrorCode::InvalidArgument, "--steps must be at least 1");

  std::string json, csv;
  if (m == Model::Kbe) {
    if (a.kb.empty()) throw Error(ErrorCode::InvalidArgument, "--kb is required for the kbe template");
    const TripleStore kb = data::load_triples(a.kb);
    const TemplateConfig cfg = template_config(m, a.dim == 0 ? 1 : a.dim, a.layers, false, a.seed);
    if (a.folds >= 2) {
      const auto cv = crossvalidate(kb, cfg, tc, mode);
      json = cv_to_json(cv);
      csv = cv_to_csv(cv);
    } else {
      const auto t = train(kb, cfg, tc, mode);
      json = trace_to_json(t);
      csv = trace_to_csv(t);
    }
  } else {
    if (a.input.empty()) throw Error(ErrorCode::InvalidArgument, "--input is required");
    std::size_t dim = a.dim;
    const auto samples = load_samples(a.input, dim);
    const TemplateConfig cfg = template_config(m, dim, a.layers, a.edge_typed, a.seed);
    if (a.folds >= 2) {
      const auto cv = crossvalidate(samples, cfg, tc, mode);
      json = cv_to_json(cv);
      csv = cv_to_csv(cv);
    } else {
      const auto t = train(samples, cfg, tc, mode);
      json = trace_to_json(t);
      csv = trace_to_csv(t);
    }
  }
  if (!a.out_json.empty()) write_text(a.out_json, json);
  if (!a.out_csv.empty()) write_text(a.out_csv, csv);
  if (a.out_json.empty() && a.out_csv.empty()) write_text("-", csv);
  return 0;
}

// ---------------------------------------------------------------- gen

struct GenArgs {
  std::string kind = "mols";
  std::size_t count = 10;
  std::size_t max_leaves = 8;
  std::size_t branching = 2;
  std::size_t depth = 3;
  std::size_t dim = 1;
  std::size_t entities = 14;
  std::size_t negatives = 50;
  std::uint64_t seed = 0;
  std::string out;
};

int run_gen(const GenArgs& a) {
  std::ostringstream os;
  if (a.kind == "stars") {
    data::write_graphs(os, data::gen_stars(a.count, a.max_leaves, a.dim, a.seed));
  } else if (a.kind == "trees") {
    data::write_graphs(os, data::gen_trees(a.count, a.branching, a.depth, a.dim, a.seed));
  } else if (a.kind == "mols") {
    data::write_graphs(os, data::gen_molecules(a.count, a.dim, a.seed));
  } else if (a.kind == "kb") {
    data::write_triples(os, data::gen_kinships(a.entities, a.negatives, a.seed));
  } else {
    throw Error(ErrorCode::InvalidArgument, "--kind must be stars, trees, mols or kb");
  }
  write_text(a.out, os.str());
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Unfold, compress and train lifted computation graphs"};
  app.require_subcommand(1);

  UnfoldArgs ua;
  auto* unfold_cmd = app.add_subcommand("unfold", "Unfold a template over one sample into a graph bundle");
  unfold_cmd->add_option("--template", ua.model, "gcn, sage, gin, graphlets or kbe")->capture_default_str();
  unfold_cmd->add_option("--layers", ua.layers, "Layers (0: template default)")->check(CLI::NonNegativeNumber);
  unfold_cmd->add_option("--dim", ua.dim, "Value dimension (0: feature length in the file)");
  unfold_cmd->add_flag("--edge-typed", ua.edge_typed, "One convolution weight per edge type");
  unfold_cmd->add_option("--input", ua.input, "Graph samples, JSON lines")->check(CLI::ExistingFile);
  unfold_cmd->add_option("--kb", ua.kb, "Triples, TSV (kbe template)")->check(CLI::ExistingFile);
  unfold_cmd->add_option("--index", ua.index, "Sample to unfold")->capture_default_str();
  unfold_cmd->add_option("--out", ua.out, "Output bundle (default stdout)");
  unfold_cmd->add_option("--seed", ua.seed, "Weight initialization seed")->capture_default_str();

  CompressArgs ca;
  auto* compress_cmd = app.add_subcommand("compress", "Merge equivalent nodes of a graph bundle");
  compress_cmd->add_option("--mode", ca.mode)->check(CLI::IsMember({"exact", "nonexact"}))->capture_default_str();
  compress_cmd->add_option("--inits", ca.inits, "Random weight lists per fingerprint")->check(CLI::PositiveNumber);
  compress_cmd->add_option("--digits", ca.digits, "Significant digits")->check(CLI::Range(1, 17))->capture_default_str();
  compress_cmd->add_option("--seed", ca.seed)->capture_default_str();
  compress_cmd->add_option("--in", ca.in)->required()->check(CLI::ExistingFile);
  compress_cmd->add_option("--out", ca.out, "Compressed bundle (default stdout)");
  compress_cmd->add_option("--report", ca.report, "JSON report path");

  VerifyArgs va;
  auto* verify_cmd = app.add_subcommand("verify", "Compare outputs of two bundles under random weights");
  verify_cmd->add_option("--in-original", va.original)->required()->check(CLI::ExistingFile);
  verify_cmd->add_option("--in-compressed", va.compressed)->required()->check(CLI::ExistingFile);
  verify_cmd->add_option("--trials", va.trials)->check(CLI::PositiveNumber)->capture_default_str();
  verify_cmd->add_option("--tol", va.tol, "Relative tolerance")->check(CLI::NonNegativeNumber)->capture_default_str();
  verify_cmd->add_option("--seed", va.seed)->capture_default_str();

  BenchArgs ba;
  auto* bench_cmd = app.add_subcommand("bench", "Sweep fingerprint precision and write a CSV");
  bench_cmd->add_option("--template", ba.model)->capture_default_str();
  bench_cmd->add_option("--dataset", ba.dataset, "Graph samples, JSON lines")->required()->check(CLI::ExistingFile);
  bench_cmd->add_option("--dims", ba.dims, "Value dimensions, e.g. 1,3,10")->capture_default_str();
  bench_cmd->add_option("--digit-sweep", ba.digit_sweep, "lo..hi or a list")->capture_default_str();
  bench_cmd->add_option("--inits-sweep", ba.inits_sweep, "lo..hi or a list")->capture_default_str();
  bench_cmd->add_option("--layers", ba.layers)->check(CLI::NonNegativeNumber);
  bench_cmd->add_option("--folds", ba.folds, "Cross-validation folds (< 2: train on everything)")->capture_default_str();
  bench_cmd->add_option("--steps", ba.steps, "ADAM steps per training run")->check(CLI::PositiveNumber)->capture_default_str();
  bench_cmd->add_option("--eval-reps", ba.eval_reps)->check(CLI::PositiveNumber)->capture_default_str();
  bench_cmd->add_option("--seed", ba.seed)->capture_default_str();
  bench_cmd->add_option("--out", ba.out, "CSV path (default stdout)");

  TrainArgs ta;
  auto* train_cmd = app.add_subcommand("train", "Full-batch ADAM training against MSE");
  train_cmd->add_option("--template", ta.model)->capture_default_str();
  train_cmd->add_option("--input", ta.input)->check(CLI::ExistingFile);
  train_cmd->add_option("--kb", ta.kb)->check(CLI::ExistingFile);
  train_cmd->add_option("--dim", ta.dim);
  train_cmd->add_option("--layers", ta.layers)->check(CLI::NonNegativeNumber);
  train_cmd->add_flag("--edge-typed", ta.edge_typed);
  train_cmd->add_option("--compress", ta.compress, "none, exact or nonexact")->capture_default_str();
  train_cmd->add_option("--inits", ta.inits)->check(CLI::PositiveNumber);
  train_cmd->add_option("--digits", ta.digits)->check(CLI::Range(1, 17));
  train_cmd->add_option("--steps", ta.steps)->capture_default_str();
  train_cmd->add_option("--lr", ta.lr)->check(CLI::PositiveNumber)->capture_default_str();
  train_cmd->add_option("--folds", ta.folds, "Cross-validation folds (< 2: train on everything)")->capture_default_str();
  train_cmd->add_option("--seed", ta.seed)->capture_default_str();
  train_cmd->add_option("--out-json", ta.out_json);
  train_cmd->add_option("--out-csv", ta.out_csv);

  GenArgs ga;
  auto* gen_cmd = app.add_subcommand("gen", "Generate a synthetic dataset");
  gen_cmd->add_option("--kind", ga.kind, "stars, trees, mols or kb")->capture_default_str();
  gen_cmd->add_option("--count", ga.count)->capture_default_str();
  gen_cmd->add_option("--max-leaves", ga.max_leaves)->check(CLI::PositiveNumber)->capture_default_str();
  gen_cmd->add_option("--branching", ga.branching)->check(CLI::PositiveNumber)->capture_default_str();
  gen_cmd->add_option("--depth", ga.depth)->capture_default_str();
  gen_cmd->add_option("--dim", ga.dim)->check(CLI::PositiveNumber)->capture_default_str();
  gen_cmd->add_option("--entities", ga.entities)->capture_default_str();
  gen_cmd->add_option("--negatives", ga.negatives)->capture_default_str();
  gen_cmd->add_option("--seed", ga.seed)->capture_default_str();
  gen_cmd->add_option("--out", ga.out);

  CLI11_PARSE(app, argc, argv);

  try {
    if (*unfold_cmd) return run_unfold(ua);
    if (*compress_cmd) return run_compress(ca);
    if (*verify_cmd) return run_verify(va);
    if (*bench_cmd) return run_bench(ba);
    if (*train_cmd) return run_train(ta);
    if (*gen_cmd) return run_gen(ga);
  } catch (const Error& e) {
    std::fprintf(stderr, "liftcg: %s\n", e.what());
    return 2;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "liftcg: %s\n", e.what());
    return 2;
  }
  return 1;
}
