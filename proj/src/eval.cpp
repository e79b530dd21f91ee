#include "thembed/eval.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <numeric>
#include <unordered_set>

#include "thembed/geometry.hpp"

namespace thembed {

int SnapshotSplit::index_of(Timestamp t) const {
  if (t <= min_time) return 0;
  const auto span = static_cast<__int128>(max_time) - min_time;
  if (span == 0) return 0;
  // ceil((t - min) * S / span) - 1: boundary values land in the earlier
  // interval, the global max in the last
  const __int128 num = (static_cast<__int128>(t) - min_time) * snapshots;
  int idx = static_cast<int>((num + span - 1) / span) - 1;
  if (idx < 0) idx = 0;
  if (idx >= snapshots) idx = snapshots - 1;
  return idx;
}

SnapshotSplit split_snapshots(const TemporalHIN& g, int S) {
  if (S < 2) throw std::invalid_argument("split_snapshots: need S >= 2");
  if (g.edge_count() == 0) throw std::invalid_argument("split_snapshots: empty graph");
  SnapshotSplit split;
  split.snapshots = S;
  split.min_time = g.min_time();
  split.max_time = g.max_time();
  split.boundaries.resize(static_cast<std::size_t>(S) + 1);
  const double width =
      static_cast<double>(split.max_time - split.min_time) / static_cast<double>(S);
  for (int i = 0; i <= S; ++i)
    split.boundaries[static_cast<std::size_t>(i)] =
        static_cast<double>(split.min_time) + width * i;
  split.edges.assign(static_cast<std::size_t>(S), {});
  for (const TemporalEdge& e : g.edges())
    split.edges[static_cast<std::size_t>(split.index_of(e.time))].push_back(e);
  std::size_t nonempty = 0;
  for (const auto& snap : split.edges)
    if (!snap.empty()) ++nonempty;
  split.degenerate = nonempty <= 1;
  return split;
}

namespace {

double score_pair(const EmbeddingMatrix& emb, const EdgePair& e, Similarity sim) {
  const auto u = emb.rows.row(e.first);
  const auto v = emb.rows.row(e.second);
  if (sim == Similarity::Cosine) {
    const double nu = u.norm();
    const double nv = v.norm();
    if (nu == 0.0 || nv == 0.0) return 0.0;
    return u.dot(v) / (nu * nv);
  }
  return -distance(emb.backend, u, v);
}

}  // namespace

AucResult link_prediction_auc(const EmbeddingMatrix& emb,
                              std::span<const EdgePair> test_edges,
                              std::span<const EdgePair> negative_edges,
                              Similarity similarity) {
  AucResult result;
  const NodeIndex n = emb.node_count();
  const auto in_range = [&](const EdgePair& e) {
    return e.first >= 0 && e.first < n && e.second >= 0 && e.second < n;
  };
  // score, is_positive
  std::vector<std::pair<double, bool>> scored;
  scored.reserve(test_edges.size() + negative_edges.size());
  for (const EdgePair& e : test_edges) {
    if (!in_range(e)) {
      ++result.skipped;
      continue;
    }
    scored.emplace_back(score_pair(emb, e, similarity), true);
    ++result.positives;
  }
  for (const EdgePair& e : negative_edges) {
    if (!in_range(e)) {
      ++result.skipped;
      continue;
    }
    scored.emplace_back(score_pair(emb, e, similarity), false);
    ++result.negatives;
  }
  if (result.positives == 0 || result.negatives == 0)
    throw std::invalid_argument("link_prediction_auc: need both positives and negatives");

  // midrank Mann-Whitney: AUC = (sum of positive ranks - P(P+1)/2) / (P*N)
  std::sort(scored.begin(), scored.end(),
            [](const auto& a, const auto& b) { return a.first < b.first; });
  double pos_rank_sum = 0.0;
  std::size_t i = 0;
  while (i < scored.size()) {
    std::size_t j = i;
    while (j < scored.size() && scored[j].first == scored[i].first) ++j;
    const double midrank = 0.5 * static_cast<double>(i + 1 + j);  // 1-based
    for (std::size_t k = i; k < j; ++k)
      if (scored[k].second) pos_rank_sum += midrank;
    i = j;
  }
  const double p = static_cast<double>(result.positives);
  const double q = static_cast<double>(result.negatives);
  result.auc = (pos_rank_sum - p * (p + 1.0) / 2.0) / (p * q);
  return result;
}

namespace {

std::uint64_t pair_key(NodeIndex a, NodeIndex b) {
  if (a > b) std::swap(a, b);
  return (static_cast<std::uint64_t>(static_cast<std::uint32_t>(a)) << 32) |
         static_cast<std::uint32_t>(b);
}

}  // namespace

std::vector<EdgePair> sample_negative_edges(const TemporalHIN& g,
                                            std::size_t count, Rng& rng,
                                            std::span<const EdgePair> test_set) {
  const std::uint64_t n = static_cast<std::uint64_t>(g.node_count());
  std::unordered_set<std::uint64_t> forbidden;
  forbidden.reserve(g.edge_count() + test_set.size());
  for (const TemporalEdge& e : g.edges()) forbidden.insert(pair_key(e.src, e.dst));
  for (const EdgePair& e : test_set) forbidden.insert(pair_key(e.first, e.second));
  const std::uint64_t total_pairs = n * (n - 1) / 2;
  // self-loops never count as candidate pairs
  std::uint64_t forbidden_pairs = 0;
  for (const std::uint64_t key : forbidden) {
    const NodeIndex a = static_cast<NodeIndex>(key >> 32);
    const NodeIndex b = static_cast<NodeIndex>(key & 0xffffffffu);
    if (a != b) ++forbidden_pairs;
  }
  if (total_pairs < forbidden_pairs + count)
    throw std::runtime_error("sample_negative_edges: graph has only " +
                             std::to_string(total_pairs - forbidden_pairs) +
                             " absent pairs, need " + std::to_string(count));
  std::vector<EdgePair> out;
  out.reserve(count);
  std::unordered_set<std::uint64_t> chosen;
  chosen.reserve(count * 2);
  while (out.size() < count) {
    const NodeIndex a = static_cast<NodeIndex>(rng.index(n));
    const NodeIndex b = static_cast<NodeIndex>(rng.index(n));
    if (a == b) continue;
    const std::uint64_t key = pair_key(a, b);
    if (forbidden.count(key) || chosen.count(key)) continue;
    chosen.insert(key);
    out.emplace_back(std::min(a, b), std::max(a, b));
  }
  return out;
}

///////////////////////////////////////////////////////////////////////////
// Logistic regression
///////////////////////////////////////////////////////////////////////////

namespace {

Eigen::MatrixXd class_probabilities(const Eigen::MatrixXd& features,
                                    const Eigen::MatrixXd& weights) {
  // features: n x d, weights: (d+1) x C with bias in the last row
  Eigen::MatrixXd logits = features * weights.topRows(weights.rows() - 1);
  logits.rowwise() += weights.row(weights.rows() - 1);
  const Eigen::VectorXd row_max = logits.rowwise().maxCoeff();
  logits.colwise() -= row_max;
  Eigen::MatrixXd p = logits.array().exp();
  const Eigen::VectorXd z = p.rowwise().sum();
  p.array().colwise() /= z.array();
  return p;
}

}  // namespace

double LogisticRegression::loss(const Eigen::MatrixXd& features,
                                const std::vector<int>& labels) const {
  const Eigen::MatrixXd p = class_probabilities(features, weights_);
  double nll = 0.0;
  for (Eigen::Index i = 0; i < features.rows(); ++i)
    nll -= std::log(std::max(p(i, labels[static_cast<std::size_t>(i)]), 1e-300));
  nll /= static_cast<double>(features.rows());
  nll += 0.5 * cfg_.l2_penalty * weights_.topRows(weights_.rows() - 1).squaredNorm();
  return nll;
}

void LogisticRegression::fit(const Eigen::MatrixXd& features,
                             const std::vector<int>& labels, int num_classes) {
  const Eigen::Index n = features.rows();
  const Eigen::Index d = features.cols();
  if (n == 0 || num_classes < 2)
    throw std::invalid_argument("LogisticRegression::fit: need samples and >= 2 classes");
  weights_ = Eigen::MatrixXd::Zero(d + 1, num_classes);
  loss_trace_.clear();
  loss_trace_.reserve(static_cast<std::size_t>(cfg_.iterations));

  Eigen::MatrixXd onehot = Eigen::MatrixXd::Zero(n, num_classes);
  for (Eigen::Index i = 0; i < n; ++i)
    onehot(i, labels[static_cast<std::size_t>(i)]) = 1.0;

  for (int it = 0; it < cfg_.iterations; ++it) {
    const Eigen::MatrixXd p = class_probabilities(features, weights_);
    const Eigen::MatrixXd diff = (p - onehot) / static_cast<double>(n);
    Eigen::MatrixXd grad(d + 1, num_classes);
    grad.topRows(d) = features.transpose() * diff +
                      cfg_.l2_penalty * weights_.topRows(d);
    grad.row(d) = diff.colwise().sum();
    weights_ -= cfg_.learning_rate * grad;
    loss_trace_.push_back(loss(features, labels));
  }
}

std::vector<int> LogisticRegression::predict(const Eigen::MatrixXd& features) const {
  const Eigen::MatrixXd p = class_probabilities(features, weights_);
  std::vector<int> out(static_cast<std::size_t>(features.rows()));
  for (Eigen::Index i = 0; i < features.rows(); ++i) {
    Eigen::Index best = 0;
    p.row(i).maxCoeff(&best);
    out[static_cast<std::size_t>(i)] = static_cast<int>(best);
  }
  return out;
}

ClassificationResult node_classification(const EmbeddingMatrix& emb,
                                         const std::vector<TypeIndex>& labels,
                                         double train_fraction, Rng& rng,
                                         const LogRegConfig& lr_cfg) {
  if (labels.size() != static_cast<std::size_t>(emb.node_count()))
    throw std::invalid_argument("node_classification: label count != node count");
  if (train_fraction <= 0.0 || train_fraction >= 1.0)
    throw std::invalid_argument("node_classification: train fraction must be in (0,1)");

  // remap labels to a dense class index
  std::vector<TypeIndex> class_of;
  std::vector<int> dense(labels.size());
  for (std::size_t i = 0; i < labels.size(); ++i) {
    const auto it = std::find(class_of.begin(), class_of.end(), labels[i]);
    if (it == class_of.end()) {
      dense[i] = static_cast<int>(class_of.size());
      class_of.push_back(labels[i]);
    } else {
      dense[i] = static_cast<int>(it - class_of.begin());
    }
  }
  const int classes = static_cast<int>(class_of.size());
  if (classes < 2)
    throw std::invalid_argument("node_classification: need at least two classes");

  // stratified split: shuffle within each class, then take the first
  // train_fraction of each
  std::vector<std::vector<NodeIndex>> by_class(static_cast<std::size_t>(classes));
  for (std::size_t i = 0; i < dense.size(); ++i)
    by_class[static_cast<std::size_t>(dense[i])].push_back(static_cast<NodeIndex>(i));
  std::vector<NodeIndex> train_idx, test_idx;
  for (auto& members : by_class) {
    for (std::size_t i = members.size(); i > 1; --i)
      std::swap(members[i - 1], members[rng.index(i)]);
    const std::size_t n_c = members.size();
    std::size_t take = static_cast<std::size_t>(
        std::llround(train_fraction * static_cast<double>(n_c)));
    if (take < 1) take = 1;
    if (n_c > 1 && take >= n_c) take = n_c - 1;
    if (take < 1)
      throw std::runtime_error("node_classification: stratification failure (class absent from train split)");
    for (std::size_t i = 0; i < n_c; ++i)
      (i < take ? train_idx : test_idx).push_back(members[i]);
  }
  if (test_idx.empty())
    throw std::runtime_error("node_classification: empty test split");

  const auto gather = [&](const std::vector<NodeIndex>& idx, Eigen::MatrixXd& X,
                          std::vector<int>& y) {
    X.resize(static_cast<Eigen::Index>(idx.size()), emb.dim());
    y.resize(idx.size());
    for (std::size_t i = 0; i < idx.size(); ++i) {
      X.row(static_cast<Eigen::Index>(i)) = emb.rows.row(idx[i]);
      y[i] = dense[static_cast<std::size_t>(idx[i])];
    }
  };
  Eigen::MatrixXd X_train, X_test;
  std::vector<int> y_train, y_test;
  gather(train_idx, X_train, y_train);
  gather(test_idx, X_test, y_test);

  LogisticRegression clf(lr_cfg);
  clf.fit(X_train, y_train, classes);
  const std::vector<int> pred = clf.predict(X_test);

  // per-class tallies over the test split
  std::vector<std::size_t> tp(static_cast<std::size_t>(classes), 0);
  std::vector<std::size_t> fp(static_cast<std::size_t>(classes), 0);
  std::vector<std::size_t> fn(static_cast<std::size_t>(classes), 0);
  for (std::size_t i = 0; i < y_test.size(); ++i) {
    if (pred[i] == y_test[i]) ++tp[static_cast<std::size_t>(y_test[i])];
    else {
      ++fp[static_cast<std::size_t>(pred[i])];
      ++fn[static_cast<std::size_t>(y_test[i])];
    }
  }
  // macro over classes present in the test truth; micro pools all decisions
  double macro = 0.0;
  int macro_classes = 0;
  std::size_t tp_sum = 0, fp_sum = 0, fn_sum = 0;
  std::vector<bool> in_test(static_cast<std::size_t>(classes), false);
  for (const int y : y_test) in_test[static_cast<std::size_t>(y)] = true;
  for (int c = 0; c < classes; ++c) {
    const std::size_t ci = static_cast<std::size_t>(c);
    tp_sum += tp[ci];
    fp_sum += fp[ci];
    fn_sum += fn[ci];
    if (!in_test[ci]) continue;
    const double denom = static_cast<double>(2 * tp[ci] + fp[ci] + fn[ci]);
    macro += denom > 0.0 ? 2.0 * static_cast<double>(tp[ci]) / denom : 0.0;
    ++macro_classes;
  }
  ClassificationResult result;
  result.macro_f1 = macro_classes > 0 ? macro / macro_classes : 0.0;
  const double micro_denom = static_cast<double>(2 * tp_sum + fp_sum + fn_sum);
  result.micro_f1 = micro_denom > 0.0 ? 2.0 * static_cast<double>(tp_sum) / micro_denom : 0.0;
  result.train_size = train_idx.size();
  result.test_size = test_idx.size();
  return result;
}

LpProtocolResult run_link_prediction_protocol(const TemporalHIN& g,
                                              const WalkConfig& walk_cfg,
                                              const TrainConfig& train_cfg,
                                              const LpProtocolConfig& cfg) {
  const SnapshotSplit split = split_snapshots(g, cfg.snapshots);
  LpProtocolResult result;
  for (int t = 1; t < cfg.snapshots; ++t) {
    const std::size_t ti = static_cast<std::size_t>(t);
    // deduplicated unordered test pairs for this snapshot
    std::unordered_set<std::uint64_t> seen;
    std::vector<EdgePair> test_edges;
    for (const TemporalEdge& e : split.edges[ti]) {
      if (e.src == e.dst) continue;
      const std::uint64_t key = pair_key(e.src, e.dst);
      if (seen.insert(key).second)
        test_edges.emplace_back(std::min(e.src, e.dst), std::max(e.src, e.dst));
    }
    if (test_edges.empty()) continue;  // empty snapshot: nothing to score

    // training graph: same node universe, exactly the edges of snapshots < t
    std::vector<TemporalEdge> train_edges;
    for (int s = 0; s < t; ++s)
      train_edges.insert(train_edges.end(), split.edges[static_cast<std::size_t>(s)].begin(),
                         split.edges[static_cast<std::size_t>(s)].end());
    if (train_edges.empty()) continue;
    TemporalHIN train_graph = g.with_edges(train_edges);

    WalkConfig wc = walk_cfg;
    wc.seed = derive_seed(cfg.seed, "lp-walk", static_cast<std::uint64_t>(t));
    const WalkCorpus corpus = generate_corpus(train_graph, wc);
    if (corpus.walks.empty()) continue;

    TrainConfig tc = train_cfg;
    tc.seed = derive_seed(cfg.seed, "lp-train", static_cast<std::uint64_t>(t));
    const TrainResult trained = train(corpus, g.node_count(), tc);

    Rng rng(derive_seed(cfg.seed, "lp-negatives", static_cast<std::uint64_t>(t)));
    const auto negatives = sample_negative_edges(g, test_edges.size(), rng, test_edges);
    const AucResult auc =
        link_prediction_auc(trained.embeddings, test_edges, negatives, cfg.similarity);

    result.test_snapshots.push_back(t + 1);  // 1-based for reporting
    result.auc.push_back(auc.auc);
    result.test_edge_counts.push_back(test_edges.size());
  }
  if (!result.auc.empty())
    result.average = std::accumulate(result.auc.begin(), result.auc.end(), 0.0) /
                     static_cast<double>(result.auc.size());
  return result;
}

void write_report(const std::string& path, std::span<const MetricRecord> records,
                  std::uint64_t seed, const std::string& config_hash) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write report: " + path);
  out << "# task\tsplit\tmetric\tvalue\tseed\tconfig\n";
  char buf[64];
  for (const MetricRecord& r : records) {
    std::snprintf(buf, sizeof buf, "%.6f", r.value);
    out << r.task << '\t' << r.split << '\t' << r.metric << '\t' << buf << '\t'
        << seed << '\t' << config_hash << '\n';
  }
  if (!out) throw std::runtime_error("write failed: " + path);
}

}  // namespace thembed
