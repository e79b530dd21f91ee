// thembed: embed temporal heterogeneous networks into the Poincare ball.
// Pipeline: ingest -> walk -> train -> eval, plus incremental corpus
// maintenance (update) and plain-text export.

#include <CLI11.hpp>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include "thembed/eval.hpp"
#include "thembed/geometry.hpp"
#include "thembed/graph.hpp"
#include "thembed/rng.hpp"
#include "thembed/trainer.hpp"
#include "thembed/types.hpp"
#include "thembed/walker.hpp"

namespace {

using namespace thembed;

struct RunConfig {
  // randomness / execution
  std::uint64_t seed = 1;
  int threads = 1;
  // walker
  double alpha = 0.9;
  double beta = 0.3;
  int walks_per_node = 10;
  int walk_length = 80;
  bool disable_temporal = false;
  bool disable_heterogeneous = false;
  // trainer
  int dim = 128;
  int negatives = 5;
  double lr = 0.001;
  double lr_final = -1.0;
  int epochs = 5;
  int window = 5;
  bool euclidean = false;
  bool async_updates = false;
  bool degree_negatives = false;
  int checkpoint_every = 0;
  // incremental update
  double horizon_fraction = 0.25;
  std::int64_t horizon = -1;
  int reversed_per_node = -1;
  // evaluation
  int snapshots = 4;
  double train_fraction = 0.75;
  std::string scorer = "cosine";
  // ingestion
  double time_scale = 0.0;

  WalkConfig walk_config() const {
    WalkConfig w;
    w.alpha = alpha;
    w.beta = beta;
    w.walks_per_node = walks_per_node;
    w.max_walk_length = walk_length;
    w.temporal_constraint = !disable_temporal;
    w.heterogeneous_constraint = !disable_heterogeneous;
    w.seed = derive_seed(seed, "walker");
    w.threads = threads;
    return w;
  }

  TrainConfig train_config() const {
    TrainConfig t;
    t.dim = dim;
    t.negatives = negatives;
    t.window = window;
    t.epochs = epochs;
    t.lr_initial = lr;
    t.lr_final = lr_final;
    t.seed = derive_seed(seed, "train");
    t.deterministic = !async_updates;
    t.threads = threads;
    t.backend = euclidean ? Backend::Euclidean : Backend::Hyperbolic;
    t.degree_negatives = degree_negatives;
    return t;
  }

  UpdateConfig update_config() const {
    UpdateConfig u;
    u.horizon = horizon;
    u.horizon_fraction = horizon_fraction;
    u.reversed_per_node = reversed_per_node;
    return u;
  }

  Similarity similarity() const {
    if (scorer == "cosine") return Similarity::Cosine;
    if (scorer == "distance") return Similarity::NegHyperbolicDistance;
    throw CLI::ValidationError("--scorer must be 'cosine' or 'distance'");
  }

  void validate() const {
    if (alpha < 0.0 || alpha > 1.0 || beta < 0.0 || beta > 1.0)
      throw CLI::ValidationError("alpha and beta must lie in [0, 1]");
    if (walks_per_node < 1 || walk_length < 2)
      throw CLI::ValidationError("need walks-per-node >= 1 and walk-length >= 2");
    if (dim < 1 || negatives < 1 || window < 1 || epochs < 0)
      throw CLI::ValidationError("dim, negatives, window must be >= 1; epochs >= 0");
    if (lr <= 0.0) throw CLI::ValidationError("lr must be positive");
    if (lr_final > lr)
      throw CLI::ValidationError("lr-final must not exceed the initial lr");
    if (snapshots < 2) throw CLI::ValidationError("snapshots must be >= 2");
    if (train_fraction <= 0.0 || train_fraction >= 1.0)
      throw CLI::ValidationError("train-fraction must lie in (0, 1)");
    if (threads < 1) throw CLI::ValidationError("threads must be >= 1");
  }

  // canonical key=value dump; its FNV-1a hash ties artifacts to the run
  std::string canonical() const {
    std::ostringstream s;
    s << "alpha=" << alpha << "\nasync=" << async_updates << "\nbeta=" << beta
      << "\ncheckpoint-every=" << checkpoint_every
      << "\ndegree-negatives=" << degree_negatives << "\ndim=" << dim
      << "\ndisable-heterogeneous=" << disable_heterogeneous
      << "\ndisable-temporal=" << disable_temporal << "\nepochs=" << epochs
      << "\neuclidean=" << euclidean << "\nhorizon=" << horizon
      << "\nhorizon-fraction=" << horizon_fraction << "\nlr=" << lr
      << "\nlr-final=" << lr_final << "\nnegatives=" << negatives
      << "\nreversed-per-node=" << reversed_per_node << "\nscorer=" << scorer
      << "\nseed=" << seed << "\nsnapshots=" << snapshots
      << "\nthreads=" << threads << "\ntime-scale=" << time_scale
      << "\ntrain-fraction=" << train_fraction
      << "\nwalk-length=" << walk_length << "\nwalks-per-node=" << walks_per_node
      << "\nwindow=" << window << "\n";
    return s.str();
  }

  std::string config_hash() const {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%016llx",
                  static_cast<unsigned long long>(fnv1a64(canonical())));
    return buf;
  }

  std::string provenance() const {
    return "seed=" + std::to_string(seed) + " config=" + config_hash();
  }
};

std::string stats_line(const TemporalHIN& g) {
  std::ostringstream s;
  s << g.node_count() << " nodes, " << g.edge_count() << " edges, "
    << g.type_count() << " node types, " << g.distinct_timestamp_count()
    << " timestamps";
  return s.str();
}

// Shared edge-file parser for update deltas; registers unseen nodes/types.
std::vector<TemporalEdge> parse_delta(TemporalHIN& g, const std::string& path,
                                      double time_scale) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open edge file: " + path);
  std::vector<TemporalEdge> out;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty() || line[0] == '#') continue;
    std::istringstream ss(line);
    std::string src, dst, st, dt, ts, et, extra;
    if (!(ss >> src >> dst >> st >> dt >> ts))
      throw std::runtime_error(path + ":" + std::to_string(line_no) +
                               ": expected 5 or 6 fields");
    const bool has_edge_type = static_cast<bool>(ss >> et);
    if (ss >> extra)
      throw std::runtime_error(path + ":" + std::to_string(line_no) +
                               ": expected 5 or 6 fields");
    Timestamp t = 0;
    try {
      if (time_scale > 0.0)
        t = static_cast<Timestamp>(std::llround(std::stod(ts) * time_scale));
      else {
        std::size_t used = 0;
        t = std::stoll(ts, &used);
        if (used != ts.size()) throw std::invalid_argument(ts);
      }
    } catch (const std::exception&) {
      throw std::runtime_error(path + ":" + std::to_string(line_no) +
                               ": bad timestamp \"" + ts + "\"");
    }
    const NodeIndex a = g.ensure_node(src, st);
    const NodeIndex b = g.ensure_node(dst, dt);
    out.push_back({a, b, t, has_edge_type ? g.ensure_edge_type(et) : kNoEdgeType});
  }
  return out;
}

int cmd_ingest(const RunConfig& cfg, const std::string& edge_file,
               const std::string& out_index) {
  LoadOptions opts;
  opts.time_scale = cfg.time_scale;
  const TemporalHIN g = TemporalHIN::load_edge_stream(edge_file, opts);
  g.save(out_index, cfg.provenance());
  std::cout << stats_line(g) << "\n";
  std::cout << "index written to " << out_index << " (+ .nodes.tsv)\n";
  return 0;
}

int cmd_walk(const RunConfig& cfg, const std::string& index,
             const std::string& out_corpus, bool emit_times) {
  const TemporalHIN g = TemporalHIN::load(index);
  const WalkConfig wc = cfg.walk_config();
  const WalkCorpus corpus = generate_corpus(g, wc);
  save_corpus(corpus, g, out_corpus, emit_times, cfg.provenance());
  std::cout << corpus.walks.size() << " walks, " << corpus.total_hops()
            << " hops (walks-per-node=" << wc.walks_per_node
            << ", max-length=" << wc.max_walk_length << ")\n";
  if (!wc.temporal_constraint)
    std::cout << "time ordering: not enforced (temporal constraint disabled)\n";
  if (!wc.heterogeneous_constraint)
    std::cout << "type constraint: disabled\n";
  std::cout << "corpus written to " << out_corpus
            << (emit_times ? " (+ .times)" : "") << "\n";
  return 0;
}

int cmd_train(const RunConfig& cfg, const std::string& index,
              const std::string& corpus_path, const std::string& out_embeddings,
              const std::string& warm_start) {
  const TemporalHIN g = TemporalHIN::load(index);
  const WalkCorpus corpus = load_corpus(corpus_path, g, /*with_times=*/false);
  TrainConfig tc = cfg.train_config();

  EmbeddingMatrix warm;
  const EmbeddingMatrix* warm_ptr = nullptr;
  if (!warm_start.empty()) {
    warm = load_embeddings(warm_start, g);
    warm_ptr = &warm;
  }

  std::vector<double> degree_cdf;
  if (tc.degree_negatives) {
    degree_cdf.resize(static_cast<std::size_t>(g.node_count()));
    double acc = 0.0;
    for (NodeIndex v = 0; v < g.node_count(); ++v) {
      acc += static_cast<double>(g.adjacency(v).size());
      degree_cdf[static_cast<std::size_t>(v)] = acc;
    }
  }

  const EpochCallback on_epoch = [&](int epoch, double mean_loss,
                                     const EmbeddingMatrix& emb) {
    std::cout << "epoch " << (epoch + 1) << "/" << tc.epochs
              << " mean_loss=" << mean_loss << "\n";
    if (cfg.checkpoint_every > 0 && (epoch + 1) % cfg.checkpoint_every == 0 &&
        epoch + 1 < tc.epochs) {
      const std::string path =
          out_embeddings + ".epoch" + std::to_string(epoch + 1);
      save_embeddings(emb, g, path, cfg.provenance());
      std::cout << "checkpoint written to " << path << "\n";
    }
  };

  const TrainResult result =
      train(corpus, g.node_count(), tc, warm_ptr,
            degree_cdf.empty() ? std::span<const double>{} : std::span<const double>(degree_cdf),
            on_epoch);
  save_embeddings(result.embeddings, g, out_embeddings, cfg.provenance());
  std::cout << g.node_count() << " nodes embedded at dim " << tc.dim << " ("
            << to_string(tc.backend) << " backend)\n";
  if (result.skipped_pairs > 0)
    std::cout << "warning: " << result.skipped_pairs
              << " singular pairs skipped\n";
  if (result.rejected_updates > 0)
    std::cout << "warning: " << result.rejected_updates
              << " non-finite updates rejected\n";
  std::cout << "embeddings written to " << out_embeddings << "\n";
  return 0;
}

int cmd_update(const RunConfig& cfg, const std::string& index,
               const std::string& corpus_path, const std::string& edges_path,
               const std::string& out_index, const std::string& out_corpus) {
  TemporalHIN g = TemporalHIN::load(index);
  WalkCorpus corpus = load_corpus(corpus_path, g, /*with_times=*/true);
  const std::vector<TemporalEdge> delta = parse_delta(g, edges_path, cfg.time_scale);
  const UpdateSummary s =
      update_corpus(g, corpus, delta, cfg.walk_config(), cfg.update_config());
  g.save(out_index, cfg.provenance());
  save_corpus(corpus, g, out_corpus, /*with_times=*/true, cfg.provenance());
  if (delta.empty()) {
    std::cout << "0 walks modified (empty delta)\n";
  } else {
    std::cout << "delta: " << delta.size() << " edges; preserved=" << s.preserved
              << " truncated=" << s.truncated << " continued=" << s.continued
              << " reversed=" << s.reversed_added << " removed=" << s.removed
              << "\n";
  }
  std::cout << "index written to " << out_index << "; corpus written to "
            << out_corpus << " (+ .times)\n";
  return 0;
}

int cmd_eval(const RunConfig& cfg, const std::string& index,
             const std::string& task, const std::string& embeddings_path,
             const std::string& report_path) {
  const TemporalHIN g = TemporalHIN::load(index);
  std::vector<MetricRecord> records;
  if (task == "lp") {
    LpProtocolConfig pc;
    pc.snapshots = cfg.snapshots;
    pc.similarity = cfg.similarity();
    pc.seed = derive_seed(cfg.seed, "eval");
    if (split_snapshots(g, cfg.snapshots).degenerate)
      std::cout << "warning: edges cover a single snapshot; later snapshots are empty\n";
    const LpProtocolResult result =
        run_link_prediction_protocol(g, cfg.walk_config(), cfg.train_config(), pc);
    std::cout << "temporal link prediction (" << cfg.scorer << " scorer, "
              << cfg.snapshots << " snapshots, test edges deduplicated)\n";
    std::cout << "snapshot\ttest_edges\tauc\n";
    for (std::size_t i = 0; i < result.auc.size(); ++i) {
      char buf[32];
      std::snprintf(buf, sizeof buf, "%.4f", result.auc[i]);
      std::cout << result.test_snapshots[i] << '\t' << result.test_edge_counts[i]
                << '\t' << buf << "\n";
      records.push_back({"lp", "snapshot:" + std::to_string(result.test_snapshots[i]),
                         "auc", result.auc[i]});
    }
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.4f", result.average);
    std::cout << "avg\t-\t" << buf << "\n";
    records.push_back({"lp", "avg", "auc", result.average});
  } else if (task == "nc") {
    if (embeddings_path.empty())
      throw CLI::ValidationError("--embeddings is required for task nc");
    const EmbeddingMatrix emb = load_embeddings(embeddings_path, g);
    std::vector<TypeIndex> labels(static_cast<std::size_t>(g.node_count()));
    for (NodeIndex v = 0; v < g.node_count(); ++v)
      labels[static_cast<std::size_t>(v)] = g.node_type(v);
    Rng rng(derive_seed(cfg.seed, "eval"));
    const ClassificationResult r =
        node_classification(emb, labels, cfg.train_fraction, rng);
    char mb[32], ub[32];
    std::snprintf(mb, sizeof mb, "%.4f", r.macro_f1);
    std::snprintf(ub, sizeof ub, "%.4f", r.micro_f1);
    std::cout << "node classification (" << r.train_size << " train / "
              << r.test_size << " test)\n";
    std::cout << "macro_f1\t" << mb << "\nmicro_f1\t" << ub << "\n";
    records.push_back({"nc", "holdout", "macro_f1", r.macro_f1});
    records.push_back({"nc", "holdout", "micro_f1", r.micro_f1});
  } else {
    throw CLI::ValidationError("unknown task \"" + task + "\" (use lp or nc)");
  }
  write_report(report_path, records, cfg.seed, cfg.config_hash());
  std::cout << "report written to " << report_path << "\n";
  return 0;
}

int cmd_export(const RunConfig& cfg, const std::string& index,
               const std::string& embeddings_path, const std::string& out_path) {
  const TemporalHIN g = TemporalHIN::load(index);
  const EmbeddingMatrix emb = load_embeddings(embeddings_path, g);
  std::ofstream out(out_path);
  if (!out) throw std::runtime_error("cannot write export: " + out_path);
  out << "# " << cfg.provenance() << "\n";
  out << "# node_id\ttype\tcoordinates...\n";
  char buf[64];
  for (NodeIndex v = 0; v < g.node_count(); ++v) {
    out << g.node_id(v) << '\t' << g.type_name(g.node_type(v));
    for (int c = 0; c < emb.dim(); ++c) {
      std::snprintf(buf, sizeof buf, "%.9g", emb.rows(v, c));
      out << '\t' << buf;
    }
    out << '\n';
  }
  std::cout << g.node_count() << " rows exported to " << out_path << "\n";
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"thembed: hyperbolic embeddings for temporal heterogeneous networks"};
  app.require_subcommand(1);
  app.fallthrough();
  app.set_config("--config", "", "key=value configuration file");
  app.allow_config_extras(false);

  RunConfig cfg;
  app.add_option("--seed", cfg.seed, "master random seed");
  app.add_option("--threads", cfg.threads, "worker thread cap");
  app.add_option("--alpha", cfg.alpha, "initial type staying probability");
  app.add_option("--beta", cfg.beta, "initial timestamp staying probability");
  app.add_option("--walks-per-node", cfg.walks_per_node, "walks started per node");
  app.add_option("--walk-length", cfg.walk_length, "maximum walk length (nodes)");
  app.add_flag("--disable-temporal", cfg.disable_temporal,
               "ignore timestamps when sampling hops");
  app.add_flag("--disable-heterogeneous", cfg.disable_heterogeneous,
               "ignore node types when sampling hops");
  app.add_option("--dim", cfg.dim, "embedding dimension");
  app.add_option("--negatives", cfg.negatives, "negative samples per pair");
  app.add_option("--lr", cfg.lr, "initial learning rate");
  app.add_option("--lr-final", cfg.lr_final, "final learning rate (default lr/10)");
  app.add_option("--epochs", cfg.epochs, "training epochs");
  app.add_option("--window", cfg.window, "co-occurrence window radius");
  app.add_flag("--euclidean", cfg.euclidean, "flat Euclidean backend");
  app.add_flag("--async", cfg.async_updates,
               "lock-free parallel updates (non-deterministic)");
  app.add_flag("--degree-negatives", cfg.degree_negatives,
               "degree-weighted negative sampling");
  app.add_option("--checkpoint-every", cfg.checkpoint_every,
                 "write checkpoints every N epochs (0 = off)");
  app.add_option("--horizon", cfg.horizon,
                 "staleness horizon for corpus updates (timestamp units)");
  app.add_option("--horizon-fraction", cfg.horizon_fraction,
                 "horizon as a fraction of the time span when --horizon unset");
  app.add_option("--reversed-per-node", cfg.reversed_per_node,
                 "reversed walks per involved node (default walks-per-node)");
  app.add_option("--snapshots", cfg.snapshots, "snapshot count for evaluation");
  app.add_option("--train-fraction", cfg.train_fraction,
                 "classifier train fraction");
  app.add_option("--scorer", cfg.scorer, "link scorer: cosine | distance");
  app.add_option("--time-scale", cfg.time_scale,
                 "scale factor for fractional timestamps (0 = integers only)");

  // ingest
  std::string edge_file, out_index;
  CLI::App* ingest = app.add_subcommand("ingest", "index an edge file");
  ingest->add_option("edge_file", edge_file, "edge list path")->required();
  ingest->add_option("--out", out_index, "output index path")->required();

  // walk
  std::string walk_index, emit_corpus;
  bool no_times = false;
  CLI::App* walk = app.add_subcommand("walk", "generate the walk corpus");
  walk->add_option("--index", walk_index, "graph index path")->required();
  walk->add_option("--emit-corpus", emit_corpus, "corpus output path")->required();
  walk->add_flag("--no-times", no_times, "skip the hop-timestamp sidecar");

  // train
  std::string train_index, train_corpus, out_embeddings, warm_start;
  CLI::App* train_cmd = app.add_subcommand("train", "optimize node embeddings");
  train_cmd->add_option("--index", train_index, "graph index path")->required();
  train_cmd->add_option("--corpus", train_corpus, "walk corpus path")->required();
  train_cmd->add_option("--out", out_embeddings, "embeddings output path")->required();
  train_cmd->add_option("--warm-start", warm_start, "resume from an embeddings file");

  // update
  std::string upd_index, upd_corpus, upd_edges, upd_out_index, upd_out_corpus;
  CLI::App* update = app.add_subcommand("update", "apply an edge delta to graph and corpus");
  update->add_option("--index", upd_index, "graph index path")->required();
  update->add_option("--corpus", upd_corpus, "corpus path (with .times sidecar)")->required();
  update->add_option("--edges", upd_edges, "new edge file (append-only)")->required();
  update->add_option("--out-index", upd_out_index, "updated index path")->required();
  update->add_option("--out-corpus", upd_out_corpus, "updated corpus path")->required();

  // eval
  std::string eval_index, eval_task, eval_embeddings, report_path = "eval_report.tsv";
  CLI::App* eval_cmd = app.add_subcommand("eval", "run an evaluation protocol");
  eval_cmd->add_option("--index", eval_index, "graph index path")->required();
  eval_cmd->add_option("--task", eval_task, "lp (link prediction) | nc (classification)")
      ->required();
  eval_cmd->add_option("--embeddings", eval_embeddings, "embeddings file (nc)");
  eval_cmd->add_option("--report", report_path, "machine-readable report path");

  // export
  std::string exp_index, exp_embeddings, exp_out;
  CLI::App* export_cmd = app.add_subcommand("export", "dump embeddings with ids and types");
  export_cmd->add_option("--index", exp_index, "graph index path")->required();
  export_cmd->add_option("--embeddings", exp_embeddings, "embeddings file")->required();
  export_cmd->add_option("--out", exp_out, "output path")->required();

  CLI11_PARSE(app, argc, argv);

  try {
    cfg.validate();
    if (ingest->parsed()) return cmd_ingest(cfg, edge_file, out_index);
    if (walk->parsed()) return cmd_walk(cfg, walk_index, emit_corpus, !no_times);
    if (train_cmd->parsed())
      return cmd_train(cfg, train_index, train_corpus, out_embeddings, warm_start);
    if (update->parsed())
      return cmd_update(cfg, upd_index, upd_corpus, upd_edges, upd_out_index,
                        upd_out_corpus);
    if (eval_cmd->parsed())
      return cmd_eval(cfg, eval_index, eval_task, eval_embeddings, report_path);
    if (export_cmd->parsed())
      return cmd_export(cfg, exp_index, exp_embeddings, exp_out);
  } catch (const CLI::ValidationError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
