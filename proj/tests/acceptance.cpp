// Acceptance suite: one pass/fail line per criterion. Criterion 7 runs only
// when the Enron edge file is available (THEMBED_ENRON or data/enron.tsv);
// criterion 8 is reported but never gates the exit status.

#include <sys/wait.h>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <iostream>
#include <map>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "testutil.hpp"
#include "thembed/eval.hpp"
#include "thembed/geometry.hpp"
#include "thembed/graph.hpp"
#include "thembed/rng.hpp"
#include "thembed/trainer.hpp"
#include "thembed/types.hpp"
#include "thembed/walker.hpp"

using namespace thembed;
using Clock = std::chrono::steady_clock;

namespace {

struct Outcome {
  bool pass = true;
  std::string detail;
};

double seconds_since(Clock::time_point t0) {
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

bool within_3se(double freq, double p, int trials) {
  const double se = std::sqrt(std::max(p * (1.0 - p), 1e-12) / trials);
  return std::abs(freq - p) <= 3.0 * se + 1e-9;
}

std::string fmt(double v, const char* spec = "%.4f") {
  char buf[64];
  std::snprintf(buf, sizeof buf, spec, v);
  return buf;
}

///////////////////////////////////////////////////////////////////////////
// 1. Walk-law oracle on the hand-built 5-node graph
///////////////////////////////////////////////////////////////////////////

Outcome criterion1() {
  const auto t0 = Clock::now();
  const std::vector<testutil::NodeSpec> nodes = {
      {"A", "X"}, {"B", "X"}, {"C", "Y"}, {"D", "Y"}, {"E", "X"}};
  const std::vector<testutil::EdgeSpec> edges = {
      {"A", "B", 1}, {"A", "C", 1}, {"A", "D", 2},
      {"A", "E", 3}, {"B", "C", 2}, {"C", "D", 3}};
  const TemporalHIN g = testutil::make_graph(nodes, edges);
  const testutil::RawGraph rg = testutil::raw_from_specs(nodes, edges);

  WalkConfig cfg;
  cfg.alpha = 0.9;
  cfg.beta = 0.3;
  const int trials = 100000;

  int states_checked = 0, outcomes_checked = 0;
  // reachable states: v arrived via an edge at time t, counters 1..3
  for (NodeIndex v = 0; v < g.node_count(); ++v) {
    for (const AdjEntry& arrival : g.adjacency(v)) {
      const Timestamp t = arrival.time;
      if (!g.has_incident_at(v, t)) continue;
      for (int n = 1; n <= 3; ++n) {
        for (int m = 1; m <= 3; ++m) {
          const auto oracle = testutil::oracle_next_hop(
              rg, v, t, g.node_type(v), n, m, cfg.alpha, cfg.beta);
          double sum = 0.0;
          for (const auto& [k, p] : oracle) sum += p;
          if (!oracle.empty() && std::abs(sum - 1.0) > 1e-12)
            return {false, "oracle mass " + fmt(sum, "%.12f") + " != 1"};

          std::map<std::pair<int, Timestamp>, int> counts;
          int stops = 0;
          Rng rng(derive_seed(4242, "c1", static_cast<std::uint64_t>(states_checked)));
          for (int i = 0; i < trials; ++i) {
            WalkState s{v, t, g.node_type(v), n, m};
            const auto hop = step(g, s, cfg, rng);
            if (!hop) ++stops;
            else ++counts[{hop->node, hop->time}];
          }
          if (oracle.empty()) {
            if (stops != trials) return {false, "expected Stop state did not stop"};
          } else {
            if (stops != 0) return {false, "unexpected stops in live state"};
            for (const auto& [key, p] : oracle) {
              const auto it = counts.find(key);
              const double f =
                  it == counts.end() ? 0.0 : static_cast<double>(it->second) / trials;
              if (!within_3se(f, p, trials))
                return {false, "state v=" + std::to_string(v) + " t=" +
                                   std::to_string(t) + " n=" + std::to_string(n) +
                                   " m=" + std::to_string(m) + " outcome (" +
                                   std::to_string(key.first) + "," +
                                   std::to_string(key.second) + "): freq " +
                                   fmt(f) + " vs p " + fmt(p)};
              ++outcomes_checked;
            }
            // no unpredicted outcome may appear
            for (const auto& [key, c] : counts)
              if (!oracle.count(key) && c > 0)
                return {false, "sampler produced an outcome the law forbids"};
          }
          ++states_checked;
        }
      }
    }
  }
  const double secs = seconds_since(t0);
  if (secs >= 30.0) return {false, "runtime " + fmt(secs, "%.1f") + "s >= 30s"};
  return {true, std::to_string(states_checked) + " states, " +
                    std::to_string(outcomes_checked) + " outcomes within 3SE, " +
                    fmt(secs, "%.1f") + "s"};
}

///////////////////////////////////////////////////////////////////////////
// 2. Temporal invariant on a 1,000-node random graph
///////////////////////////////////////////////////////////////////////////

Outcome criterion2() {
  const TemporalHIN g = testutil::random_temporal_graph(1000, 8000, 3, 30, 271);
  WalkConfig cfg;
  cfg.walks_per_node = 10;
  cfg.max_walk_length = 80;
  cfg.seed = 272;
  cfg.threads = 2;
  const WalkCorpus corpus = generate_corpus(g, cfg);
  if (corpus.walks.size() < 9900)
    return {false, "only " + std::to_string(corpus.walks.size()) + " walks"};
  std::size_t violations = 0;
  for (const Walk& w : corpus.walks) {
    for (std::size_t i = 0; i + 1 < w.times.size(); ++i)
      if (w.times[i] > w.times[i + 1]) ++violations;
    for (std::size_t i = 0; i + 1 < w.nodes.size(); ++i) {
      const auto pool = g.neighbors_exactly_at(w.nodes[i], w.times[i]);
      const bool found = std::any_of(pool.begin(), pool.end(), [&](const AdjEntry& e) {
        return e.neighbor == w.nodes[i + 1];
      });
      if (!found) ++violations;
    }
  }
  if (violations > 0)
    return {false, std::to_string(violations) + " ordering/edge violations"};
  return {true, std::to_string(corpus.walks.size()) +
                    " walks, zero ordering or edge violations"};
}

///////////////////////////////////////////////////////////////////////////
// 3. Gradient correctness: Eq.-level and full pair-loss finite differences
///////////////////////////////////////////////////////////////////////////

Outcome criterion3() {
  const auto t0 = Clock::now();
  Rng rng(273);
  const int dim = 6;
  const auto random_point = [&](double max_norm) {
    RowVec p(dim);
    for (int i = 0; i < dim; ++i) p[i] = rng.normal();
    return RowVec(p * (max_norm * std::pow(rng.uniform(), 1.0 / dim) / p.norm()));
  };
  const auto rel_err = [](double a, double b) {
    return std::abs(a - b) / std::max({std::abs(a), std::abs(b), 1e-6});
  };
  const double h = 1e-6;

  int pairs_checked = 0;
  double worst = 0.0;
  while (pairs_checked < 1000) {
    const RowVec u = random_point(0.9);
    const RowVec v = random_point(0.9);
    if ((u - v).norm() < 1e-3) continue;

    const DistanceGradients gr = poincare_distance_gradients(u, v);
    if (gr.singular) continue;
    for (int c = 0; c < dim; ++c) {
      RowVec hi = u, lo = u;
      hi[c] += h;
      lo[c] -= h;
      const double fd = (poincare_distance(hi, v) - poincare_distance(lo, v)) / (2 * h);
      worst = std::max(worst, rel_err(gr.grad_u[c], fd));
      RowVec vhi = v, vlo = v;
      vhi[c] += h;
      vlo[c] -= h;
      const double fdv =
          (poincare_distance(u, vhi) - poincare_distance(u, vlo)) / (2 * h);
      worst = std::max(worst, rel_err(gr.grad_v[c], fdv));
    }

    // full ranking-loss gradients against finite differences
    std::vector<RowVec> negs;
    bool bad = false;
    for (int j = 0; j < 3; ++j) {
      negs.push_back(random_point(0.9));
      if ((negs.back() - u).norm() < 1e-3) bad = true;
    }
    if (bad) continue;
    const PairLossResult pl = pair_loss(Backend::Hyperbolic, u, v, negs);
    if (pl.singular) continue;
    const auto loss_at = [&](const RowVec& uu, const RowVec& vv,
                             const std::vector<RowVec>& nn) {
      return pair_loss(Backend::Hyperbolic, uu, vv, nn).loss;
    };
    for (int c = 0; c < dim; ++c) {
      RowVec hi = u, lo = u;
      hi[c] += h;
      lo[c] -= h;
      worst = std::max(worst, rel_err(pl.grad_u[c],
                                      (loss_at(hi, v, negs) - loss_at(lo, v, negs)) / (2 * h)));
      RowVec vhi = v, vlo = v;
      vhi[c] += h;
      vlo[c] -= h;
      worst = std::max(worst, rel_err(pl.grad_v[c],
                                      (loss_at(u, vhi, negs) - loss_at(u, vlo, negs)) / (2 * h)));
    }
    for (std::size_t j = 0; j < negs.size(); ++j) {
      for (int c = 0; c < dim; ++c) {
        auto hi = negs, lo = negs;
        hi[j][c] += h;
        lo[j][c] -= h;
        worst = std::max(worst,
                         rel_err(pl.grad_negatives[j][c],
                                 (loss_at(u, v, hi) - loss_at(u, v, lo)) / (2 * h)));
      }
    }
    ++pairs_checked;
  }
  const double secs = seconds_since(t0);
  if (worst >= 1e-4)
    return {false, "worst relative error " + fmt(worst, "%.2e")};
  if (secs >= 10.0) return {false, "runtime " + fmt(secs, "%.1f") + "s >= 10s"};
  return {true, "1000 pairs, worst relative error " + fmt(worst, "%.2e") + ", " +
                    fmt(secs, "%.1f") + "s"};
}

///////////////////////////////////////////////////////////////////////////
// 4. Ball containment through ten epochs
///////////////////////////////////////////////////////////////////////////

Outcome criterion4() {
  const TemporalHIN g = testutil::random_temporal_graph(1000, 8000, 3, 30, 274);
  WalkConfig wc;
  wc.walks_per_node = 3;
  wc.max_walk_length = 24;
  wc.seed = 275;
  wc.threads = 2;
  const WalkCorpus corpus = generate_corpus(g, wc);
  TrainConfig tc;
  tc.dim = 16;
  tc.epochs = 10;
  tc.negatives = 5;
  tc.seed = 276;

  bool ok = true;
  std::string detail;
  const EpochCallback audit = [&](int epoch, double, const EmbeddingMatrix& emb) {
    if (!emb.rows.allFinite()) {
      ok = false;
      detail = "non-finite value at epoch " + std::to_string(epoch + 1);
      return;
    }
    for (NodeIndex v = 0; v < emb.node_count(); ++v) {
      if (emb.rows.row(v).norm() > 1.0 - 1e-5 + 1e-15) {
        ok = false;
        detail = "row norm " + fmt(emb.rows.row(v).norm(), "%.8f") + " at epoch " +
                 std::to_string(epoch + 1);
        return;
      }
    }
  };
  train(corpus, g.node_count(), tc, nullptr, {}, audit);
  if (!ok) return {false, detail};
  return {true, "10 epochs, all rows finite with norm <= 1 - 1e-5"};
}

///////////////////////////////////////////////////////////////////////////
// 5. Structural recovery: two-clique toy and planted partitions
///////////////////////////////////////////////////////////////////////////

struct PlantedRun {
  LpProtocolResult result;
  double baseline = 0.0;  // permuted-row control on the last snapshot
};

PlantedRun run_planted(const TemporalHIN& g, bool disable_temporal, bool euclidean) {
  WalkConfig wc;
  wc.walks_per_node = 10;
  wc.max_walk_length = 80;
  wc.seed = 277;
  wc.threads = 2;
  wc.temporal_constraint = !disable_temporal;
  TrainConfig tc;
  tc.dim = 16;
  tc.epochs = 3;
  tc.negatives = 5;
  tc.seed = 278;
  tc.backend = euclidean ? Backend::Euclidean : Backend::Hyperbolic;
  LpProtocolConfig pc;
  pc.snapshots = 4;
  pc.seed = 279;

  PlantedRun run;
  run.result = run_link_prediction_protocol(g, wc, tc, pc);

  // permutation control: identical protocol data, rows shuffled at random
  const SnapshotSplit split = split_snapshots(g, pc.snapshots);
  std::set<std::pair<NodeIndex, NodeIndex>> dedup;
  for (const TemporalEdge& e : split.edges.back())
    if (e.src != e.dst)
      dedup.insert({std::min(e.src, e.dst), std::max(e.src, e.dst)});
  const std::vector<EdgePair> test(dedup.begin(), dedup.end());
  Rng rng(280);
  const auto negatives = sample_negative_edges(g, test.size(), rng, test);
  EmbeddingMatrix random_emb;
  random_emb.backend = Backend::Euclidean;
  random_emb.rows.resize(g.node_count(), 8);
  for (NodeIndex v = 0; v < g.node_count(); ++v)
    for (int c = 0; c < 8; ++c) random_emb.rows(v, c) = rng.normal();
  run.baseline = link_prediction_auc(random_emb, test, negatives).auc;
  return run;
}

Outcome criterion5(PlantedRun& out_default_run, TemporalHIN& out_graph) {
  const auto t0 = Clock::now();
  // (a) two-clique toy: intra < inter after training
  {
    const TemporalHIN g = testutil::two_clique_graph();
    WalkConfig wc;
    wc.walks_per_node = 10;
    wc.max_walk_length = 40;
    wc.seed = 281;
    const WalkCorpus corpus = generate_corpus(g, wc);
    TrainConfig tc;
    tc.dim = 8;
    tc.epochs = 5;
    tc.negatives = 3;
    tc.seed = 282;
    const TrainResult r = train(corpus, g.node_count(), tc);
    double intra = 0.0, inter = 0.0;
    int ni = 0, nx = 0;
    for (NodeIndex a = 0; a < 10; ++a)
      for (NodeIndex b = a + 1; b < 10; ++b) {
        const double d =
            poincare_distance(r.embeddings.rows.row(a), r.embeddings.rows.row(b));
        if ((a < 5) == (b < 5)) {
          intra += d;
          ++ni;
        } else {
          inter += d;
          ++nx;
        }
      }
    if (intra / ni >= inter / nx)
      return {false, "two-clique: intra " + fmt(intra / ni) + " >= inter " +
                         fmt(inter / nx)};
  }

  // (b) planted-partition temporal graph, 1000 nodes, 2 node types
  out_graph = testutil::planted_partition_graph(1000, 50, 30, 50, 20, 283);
  out_default_run = run_planted(out_graph, false, false);
  const double auc = out_default_run.result.average;
  const double base = out_default_run.baseline;
  const double secs = seconds_since(t0);
  if (out_default_run.result.auc.empty()) return {false, "protocol produced no AUC"};
  if (auc < 0.85)
    return {false, "planted AUC " + fmt(auc) + " < 0.85 (baseline " + fmt(base) + ")"};
  if (std::abs(base - 0.5) > 0.02)
    return {false, "permutation baseline " + fmt(base) + " outside 0.5 +/- 0.02"};
  if (secs >= 300.0) return {false, "runtime " + fmt(secs, "%.0f") + "s >= 300s"};
  return {true, "two-clique separated; planted AUC " + fmt(auc) + " (baseline " +
                    fmt(base) + "), " + fmt(secs, "%.0f") + "s"};
}

///////////////////////////////////////////////////////////////////////////
// 6. Incremental-rule audit on a 50-node instance
///////////////////////////////////////////////////////////////////////////

Outcome criterion6() {
  TemporalHIN g = testutil::random_temporal_graph(50, 250, 2, 10, 284);
  WalkConfig cfg;
  cfg.walks_per_node = 4;
  cfg.max_walk_length = 12;
  cfg.seed = 285;
  WalkCorpus corpus = generate_corpus(g, cfg);

  const Timestamp new_max = 12;
  const Timestamp horizon = 6;
  const Timestamp threshold = new_max - horizon;

  // delta: chain the nodes of the first stale walk (so rules 2 and 3 both
  // fire) while leaving plenty of walks untouched for rule 1
  std::vector<TemporalEdge> delta;
  for (const Walk& w : corpus.walks) {
    if (w.times.front() >= threshold) continue;
    std::set<NodeIndex> chain(w.nodes.begin(), w.nodes.end());
    NodeIndex prev = -1;
    for (const NodeIndex v : chain) {
      if (prev >= 0) delta.push_back({prev, v, 11, kNoEdgeType});
      prev = v;
    }
    break;
  }
  if (delta.empty()) return {false, "no stale walk to exercise rule 2"};
  delta.push_back({delta.front().src, delta.front().dst, new_max, kNoEdgeType});

  std::vector<char> involved(static_cast<std::size_t>(g.node_count()), 0);
  for (const TemporalEdge& e : delta) {
    involved[static_cast<std::size_t>(e.src)] = 1;
    involved[static_cast<std::size_t>(e.dst)] = 1;
  }

  // snapshot inputs for the audit
  const std::vector<Walk> before = corpus.walks;
  UpdateConfig ucfg;
  ucfg.horizon = horizon;
  const UpdateSummary s = update_corpus(g, corpus, delta, cfg, ucfg);

  // (a) uninvolved walks byte-identical, in order, among the survivors
  std::vector<char> is_preserved_output(corpus.walks.size(), 0);
  std::size_t out_i = 0;
  std::size_t preserved_seen = 0;
  for (const Walk& w : before) {
    const bool touched = std::any_of(w.nodes.begin(), w.nodes.end(), [&](NodeIndex v) {
      return involved[static_cast<std::size_t>(v)] != 0;
    });
    if (!touched) {
      // find it at the current output cursor (order is preserved)
      while (out_i < corpus.walks.size() &&
             (corpus.walks[out_i].nodes != w.nodes || corpus.walks[out_i].times != w.times))
        ++out_i;
      if (out_i == corpus.walks.size())
        return {false, "an uninvolved walk changed or vanished"};
      is_preserved_output[out_i] = 1;
      ++preserved_seen;
      ++out_i;
    }
  }
  if (preserved_seen != s.preserved)
    return {false, "preserved count mismatch: audit " + std::to_string(preserved_seen) +
                       " vs summary " + std::to_string(s.preserved)};
  if (s.preserved == 0) return {false, "rule-1 audit vacuous: no uninvolved walks"};
  if (s.truncated == 0 && s.removed == 0)
    return {false, "rule-2 audit vacuous: nothing was stale"};

  // (b) every walk the update touched or created respects the horizon;
  // rule-1 walks are exempt by construction
  for (std::size_t i = 0; i < corpus.walks.size(); ++i) {
    if (is_preserved_output[i]) continue;
    for (const Timestamp t : corpus.walks[i].times)
      if (t < threshold)
        return {false, "hop at " + std::to_string(t) + " survived threshold " +
                           std::to_string(threshold)};
  }

  // (c) surviving involved-tail walks below max length were extended
  std::size_t extended = 0;
  for (const Walk& w : before) {
    const bool touched = std::any_of(w.nodes.begin(), w.nodes.end(), [&](NodeIndex v) {
      return involved[static_cast<std::size_t>(v)] != 0;
    });
    if (!touched) continue;
    // reconstruct what rule 2 leaves behind
    std::size_t first_valid = 0;
    while (first_valid < w.times.size() && w.times[first_valid] < threshold)
      ++first_valid;
    if (first_valid == w.times.size()) continue;  // removed entirely
    std::vector<NodeIndex> tail_nodes(w.nodes.begin() + static_cast<std::ptrdiff_t>(first_valid),
                                      w.nodes.end());
    if (!involved[static_cast<std::size_t>(tail_nodes.back())]) continue;
    if (static_cast<int>(tail_nodes.size()) >= cfg.max_walk_length) continue;
    // its surviving version in the output must now be strictly longer
    bool found_longer = false;
    for (const Walk& out : corpus.walks) {
      if (out.nodes.size() > tail_nodes.size() &&
          std::equal(tail_nodes.begin(), tail_nodes.end(), out.nodes.begin())) {
        found_longer = true;
        break;
      }
    }
    if (!found_longer)
      return {false, "a walk ending at an involved node was not continued"};
    ++extended;
  }

  // (d) reversed walks: new-epoch walks end at involved nodes with
  // non-decreasing times
  std::size_t reversed_seen = 0;
  for (const Walk& w : corpus.walks) {
    if (w.epoch != 1) continue;
    ++reversed_seen;
    for (std::size_t i = 0; i + 1 < w.times.size(); ++i)
      if (w.times[i] > w.times[i + 1])
        return {false, "reversed walk stored with decreasing times"};
    if (!involved[static_cast<std::size_t>(w.nodes.back())])
      return {false, "reversed walk does not end at an involved node"};
  }
  if (reversed_seen != s.reversed_added)
    return {false, "reversed count mismatch"};

  const std::string err = validate_corpus(corpus, g, cfg);
  if (!err.empty()) return {false, "corpus invalid after update: " + err};
  return {true, "rules 1-4 audited: preserved=" + std::to_string(s.preserved) +
                    " truncated=" + std::to_string(s.truncated) +
                    " continued=" + std::to_string(extended) +
                    " reversed=" + std::to_string(s.reversed_added)};
}

///////////////////////////////////////////////////////////////////////////
// 7. Conditional Enron reproduction
///////////////////////////////////////////////////////////////////////////

Outcome criterion7(bool& skipped) {
  const char* env = std::getenv("THEMBED_ENRON");
  std::string path = env ? env : "data/enron.tsv";
  std::ifstream probe(path);
  if (!probe) {
    skipped = true;
    return {true,
            "Enron edge file not found (set THEMBED_ENRON or place data/enron.tsv: "
            "tab-separated src dst src_type dst_type timestamp); criteria 1-6 "
            "substitute per the desk-scale policy"};
  }
  const TemporalHIN g = TemporalHIN::load_edge_stream(path);
  std::ostringstream stats;
  stats << g.node_count() << "/" << g.edge_count() << "/" << g.type_count() << "/"
        << g.distinct_timestamp_count();
  WalkConfig wc;  // stock defaults: alpha .9, beta .3, 10 walks, length 80
  wc.seed = 286;
  wc.threads = 2;
  TrainConfig tc;  // d = 128, k = 5, lr = 0.001
  tc.dim = 128;
  tc.seed = 287;
  LpProtocolConfig pc;
  pc.snapshots = 4;
  pc.seed = 288;
  const LpProtocolResult r = run_link_prediction_protocol(g, wc, tc, pc);
  const double target = 0.9148;
  if (std::abs(r.average - target) > 0.05)
    return {false, "avg AUC " + fmt(r.average) + " outside " + fmt(target) +
                       " +/- 0.05 (stats " + stats.str() + ")"};
  return {true, "avg AUC " + fmt(r.average) + " within 0.05 of " + fmt(target) +
                    " (stats " + stats.str() + ")"};
}

///////////////////////////////////////////////////////////////////////////
// 8. Ablation direction (soft, reported)
///////////////////////////////////////////////////////////////////////////

Outcome criterion8(const TemporalHIN& g, const PlantedRun& base_run) {
  const double base = base_run.result.average;
  const PlantedRun no_temporal = run_planted(g, true, false);
  const PlantedRun euclid = run_planted(g, false, true);
  const double nt = no_temporal.result.average;
  const double eu = euclid.result.average;
  const bool ordered = nt <= base + 0.02 && eu <= base + 0.02;
  return {ordered, "default " + fmt(base) + ", -temporal " + fmt(nt) +
                       ", euclidean " + fmt(eu) +
                       (ordered ? " (no ablation improves by > 0.02)"
                                : " (an ablation improved by > 0.02)")};
}

///////////////////////////////////////////////////////////////////////////
// 9. Command determinism through the CLI binary
///////////////////////////////////////////////////////////////////////////

int run_cli(const std::string& args) {
  const std::string cmd = std::string(THEMBED_CLI_PATH) + " " + args + " > /dev/null 2>&1";
  const int status = std::system(cmd.c_str());
  return status < 0 ? status : WEXITSTATUS(status);
}

Outcome criterion9() {
  const std::string p = testutil::temp_path("acc9_");
  const auto g = testutil::random_temporal_graph(50, 220, 3, 10, 289);
  testutil::write_edge_file(g, p + "edges.tsv");
  testutil::write_file(p + "delta.tsv", "n0 n1 T0 T1 15\nn2 n3 T2 T0 16\n");

  const auto cleanup = [&] {
    for (const char* s :
         {"edges.tsv", "delta.tsv", "a.idx", "a.idx.nodes.tsv", "b.idx",
          "b.idx.nodes.tsv", "a.corpus", "a.corpus.times", "b.corpus",
          "b.corpus.times", "a.emb", "b.emb", "a.rep", "b.rep", "ua.idx",
          "ua.idx.nodes.tsv", "ub.idx", "ub.idx.nodes.tsv", "ua.corpus",
          "ua.corpus.times", "ub.corpus", "ub.corpus.times"})
      std::remove((p + s).c_str());
  };

  const std::string shared = " --seed 31 --walks-per-node 3 --walk-length 12"
                             " --dim 6 --epochs 2 --negatives 3 --snapshots 3";
  for (const char* tag : {"a", "b"}) {
    const std::string t = p + tag;
    if (run_cli("ingest " + p + "edges.tsv --out " + t + ".idx" + shared) != 0)
      return {false, "ingest failed"};
    if (run_cli("walk --index " + t + ".idx --emit-corpus " + t + ".corpus" + shared) != 0)
      return {false, "walk failed"};
    if (run_cli("train --index " + t + ".idx --corpus " + t + ".corpus --out " +
                t + ".emb" + shared) != 0)
      return {false, "train failed"};
    if (run_cli("update --index " + t + ".idx --corpus " + t + ".corpus --edges " +
                p + "delta.tsv --out-index " + p + "u" + tag + ".idx --out-corpus " +
                p + "u" + tag + ".corpus" + shared) != 0)
      return {false, "update failed"};
    if (run_cli("eval --index " + t + ".idx --task lp --report " + t + ".rep" +
                shared) != 0)
      return {false, "eval failed"};
  }
  const auto same = [&](const std::string& x) {
    return testutil::read_file(p + "a" + x) == testutil::read_file(p + "b" + x);
  };
  for (const char* artifact : {".idx", ".idx.nodes.tsv", ".corpus", ".corpus.times",
                               ".emb", ".rep"}) {
    if (!same(artifact)) {
      cleanup();
      return {false, std::string("artifact ") + artifact + " differs between runs"};
    }
  }
  if (testutil::read_file(p + "ua.corpus") != testutil::read_file(p + "ub.corpus") ||
      testutil::read_file(p + "ua.idx") != testutil::read_file(p + "ub.idx")) {
    cleanup();
    return {false, "updated artifacts differ between runs"};
  }
  cleanup();
  return {true, "ingest/walk/train/update/eval byte-identical across repeated runs"};
}

}  // namespace

int main(int argc, char** argv) {
  const int only = argc > 1 ? std::atoi(argv[1]) : 0;
  int failures = 0;
  const auto report = [&](int id, const char* name, const Outcome& o,
                          bool gated = true, bool skipped = false) {
    const char* tag = skipped ? "SKIP" : (o.pass ? "PASS" : (gated ? "FAIL" : "WARN"));
    std::cout << "[" << tag << "] criterion " << id << " (" << name
              << "): " << o.detail << "\n";
    if (!o.pass && gated) ++failures;
  };

  TemporalHIN planted_graph;
  PlantedRun planted_run;
  bool have_planted = false;

  if (!only || only == 1) report(1, "walk-law oracle", criterion1());
  if (!only || only == 2) report(2, "temporal invariant", criterion2());
  if (!only || only == 3) report(3, "gradient correctness", criterion3());
  if (!only || only == 4) report(4, "ball containment", criterion4());
  if (!only || only == 5) {
    report(5, "structural recovery", criterion5(planted_run, planted_graph));
    have_planted = !planted_run.result.auc.empty();
  }
  if (!only || only == 6) report(6, "incremental-rule audit", criterion6());
  if (!only || only == 7) {
    bool skipped = false;
    const Outcome o = criterion7(skipped);
    report(7, "enron benchmark reproduction", o, true, skipped);
  }
  if (!only || only == 8) {
    if (!have_planted) {
      planted_graph = testutil::planted_partition_graph(1000, 50, 30, 50, 20, 283);
      planted_run = run_planted(planted_graph, false, false);
    }
    report(8, "ablation direction (soft)", criterion8(planted_graph, planted_run),
           /*gated=*/false);
  }
  if (!only || only == 9) report(9, "determinism", criterion9());

  std::cout << (failures == 0 ? "acceptance: all gated criteria passed\n"
                              : "acceptance: FAILURES present\n");
  return failures == 0 ? 0 : 1;
}
