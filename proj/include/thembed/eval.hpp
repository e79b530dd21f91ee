#ifndef THEMBED_EVAL_HPP
#define THEMBED_EVAL_HPP

#include <Eigen/Core>
#include <cstdint>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "thembed/graph.hpp"
#include "thembed/rng.hpp"
#include "thembed/trainer.hpp"
#include "thembed/types.hpp"
#include "thembed/walker.hpp"

namespace thembed {

// Partition of the edge stream into S equal-width timestamp intervals.
// An edge exactly on a boundary belongs to the earlier interval; the global
// minimum goes to the first snapshot, the global maximum to the last.
struct SnapshotSplit {
  int snapshots = 0;
  Timestamp min_time = 0;
  Timestamp max_time = 0;
  std::vector<double> boundaries;                     // S + 1 values
  std::vector<std::vector<TemporalEdge>> edges;       // per snapshot
  bool degenerate = false;                            // all edges in one snapshot

  int index_of(Timestamp t) const;
};

SnapshotSplit split_snapshots(const TemporalHIN& g, int S);

enum class Similarity { Cosine, NegHyperbolicDistance };

using EdgePair = std::pair<NodeIndex, NodeIndex>;

struct AucResult {
  double auc = 0.0;
  std::size_t positives = 0;
  std::size_t negatives = 0;
  std::size_t skipped = 0;  // edges with endpoints outside the matrix
};

// Mann-Whitney statistic over similarity scores: P(score(pos) > score(neg))
// with ties counted one half. Cosine is the default scorer; negative
// hyperbolic distance is the alternative.
AucResult link_prediction_auc(const EmbeddingMatrix& emb,
                              std::span<const EdgePair> test_edges,
                              std::span<const EdgePair> negative_edges,
                              Similarity similarity = Similarity::Cosine);

// Uniformly sampled distinct node pairs that are edges nowhere in the graph
// (any timestamp) and absent from the test set. Errors when the graph has
// fewer absent pairs than requested.
std::vector<EdgePair> sample_negative_edges(const TemporalHIN& g,
                                            std::size_t count, Rng& rng,
                                            std::span<const EdgePair> test_set = {});

struct ClassificationResult {
  double macro_f1 = 0.0;
  double micro_f1 = 0.0;
  std::size_t train_size = 0;
  std::size_t test_size = 0;
};

struct LogRegConfig {
  double learning_rate = 0.5;
  double l2_penalty = 1e-4;
  int iterations = 500;
};

// Multinomial logistic regression trained by full-batch gradient descent;
// no external solver. Returns the loss trace for probe tests.
class LogisticRegression {
 public:
  explicit LogisticRegression(LogRegConfig cfg = {}) : cfg_(cfg) {}

  void fit(const Eigen::MatrixXd& features, const std::vector<int>& labels,
           int num_classes);
  std::vector<int> predict(const Eigen::MatrixXd& features) const;
  double loss(const Eigen::MatrixXd& features, const std::vector<int>& labels) const;
  const std::vector<double>& loss_trace() const { return loss_trace_; }
  const Eigen::MatrixXd& weights() const { return weights_; }

 private:
  LogRegConfig cfg_;
  Eigen::MatrixXd weights_;  // (dim + 1) x classes, last row is the bias
  std::vector<double> loss_trace_;
};

// Stratified train/test split on node-type labels, internal classifier,
// macro- and micro-averaged F1 on the held-out fraction.
ClassificationResult node_classification(const EmbeddingMatrix& emb,
                                         const std::vector<TypeIndex>& labels,
                                         double train_fraction, Rng& rng,
                                         const LogRegConfig& lr_cfg = {});

struct LpProtocolConfig {
  int snapshots = 4;
  Similarity similarity = Similarity::Cosine;
  std::uint64_t seed = 1;
};

struct LpProtocolResult {
  std::vector<int> test_snapshots;      // 1-based snapshot ids
  std::vector<double> auc;              // aligned with test_snapshots
  double average = 0.0;
  std::vector<std::size_t> test_edge_counts;
};

// For each snapshot t >= 2: train embeddings on all edges of snapshots
// < t, then score snapshot t's deduplicated edges against an equal count
// of sampled non-edges. Reports per-snapshot AUC and the average.
LpProtocolResult run_link_prediction_protocol(const TemporalHIN& g,
                                              const WalkConfig& walk_cfg,
                                              const TrainConfig& train_cfg,
                                              const LpProtocolConfig& cfg);

// Machine-readable metrics: one record per (task, split, metric, value),
// tab separated, with seed and config hash on every line.
struct MetricRecord {
  std::string task;
  std::string split;
  std::string metric;
  double value = 0.0;
};

void write_report(const std::string& path, std::span<const MetricRecord> records,
                  std::uint64_t seed, const std::string& config_hash);

}  // namespace thembed

#endif
