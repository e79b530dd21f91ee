#include "thembed/trainer.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <thread>

namespace thembed {

std::vector<std::pair<NodeIndex, NodeIndex>> cooccurrence_pairs(
    const WalkCorpus& corpus, int window) {
  if (window < 1) throw std::invalid_argument("cooccurrence window must be >= 1");
  std::vector<std::pair<NodeIndex, NodeIndex>> pairs;
  for (const Walk& w : corpus.walks) {
    const int len = static_cast<int>(w.nodes.size());
    for (int i = 0; i < len; ++i) {
      const int lo = std::max(0, i - window);
      const int hi = std::min(len - 1, i + window);
      for (int j = lo; j <= hi; ++j) {
        if (j == i || w.nodes[i] == w.nodes[j]) continue;
        pairs.emplace_back(w.nodes[i], w.nodes[j]);
      }
    }
  }
  return pairs;
}

double sigmoid(double x) {
  if (x >= 0.0) return 1.0 / (1.0 + std::exp(-x));
  const double e = std::exp(x);
  return e / (1.0 + e);
}

double log_sigmoid(double x) {
  if (x >= 0.0) return -std::log1p(std::exp(-x));
  return x - std::log1p(std::exp(x));
}

double cooccurrence_probability(Backend backend, Eigen::Ref<const RowVec> u,
                                Eigen::Ref<const RowVec> v) {
  return sigmoid(-distance(backend, u, v));
}

namespace {

// Shared gradient kernel. Fills ascent-direction gradients of
//   l = sum_j log sigma(d(u, n_j) - d(u, v))
// into the scratch buffers and returns the minimized loss -l. Per-negative
// coefficient (1 - sigma(d(u,n_j) - d(u,v))) follows the chain rule of the
// ranking objective. Returns false when (u, v) is singular.
struct PairScratch {
  RowVec g_uv_u, g_uv_v;      // distance gradients of the positive pair
  RowVec g_un_u, g_un_n;      // distance gradients of one negative pair
  RowVec asc_u, asc_v;        // accumulated ascent gradients
  Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor> asc_n;

  void resize(int dim, int k) {
    g_uv_u.resize(dim);
    g_uv_v.resize(dim);
    g_un_u.resize(dim);
    g_un_n.resize(dim);
    asc_u.resize(dim);
    asc_v.resize(dim);
    asc_n.resize(k, dim);
  }
};

template <typename DU, typename DV, typename NegAt>
bool pair_gradients(Backend backend, const Eigen::MatrixBase<DU>& u,
                    const Eigen::MatrixBase<DV>& v, int k, NegAt&& neg_at,
                    PairScratch& s, double& loss_out) {
  double d_uv = 0.0;
  if (!distance_gradients_into(backend, u, v, d_uv, s.g_uv_u, s.g_uv_v))
    return false;

  s.asc_u.setZero();
  s.asc_v.setZero();
  double loss = 0.0;
  for (int j = 0; j < k; ++j) {
    double d_un = 0.0;
    const bool ok =
        distance_gradients_into(backend, u, neg_at(j), d_un, s.g_un_u, s.g_un_n);
    const double x = d_un - d_uv;
    loss -= log_sigmoid(x);
    const double c = 1.0 - sigmoid(x);
    if (ok) {
      s.asc_u += c * (s.g_un_u - s.g_uv_u);
      s.asc_n.row(j) = c * s.g_un_n;
    } else {
      // coincident negative: distance term counts, gradient direction
      // undefined, contribution dropped
      s.asc_u -= c * s.g_uv_u;
      s.asc_n.row(j).setZero();
    }
    s.asc_v -= c * s.g_uv_v;
  }
  loss_out = loss;
  return true;
}

}  // namespace

PairLossResult pair_loss(Backend backend, Eigen::Ref<const RowVec> u,
                         Eigen::Ref<const RowVec> v,
                         const std::vector<RowVec>& negatives) {
  const int dim = static_cast<int>(u.size());
  const int k = static_cast<int>(negatives.size());
  PairScratch s;
  s.resize(dim, std::max(1, k));
  PairLossResult out;
  double loss = 0.0;
  if (!pair_gradients(backend, u, v, k,
                      [&](int j) -> const RowVec& { return negatives[j]; }, s,
                      loss)) {
    out.singular = true;
    return out;
  }
  out.loss = loss;
  out.grad_u = -s.asc_u;  // minimized-loss orientation
  out.grad_v = -s.asc_v;
  out.grad_negatives.reserve(static_cast<std::size_t>(k));
  for (int j = 0; j < k; ++j) out.grad_negatives.emplace_back(-s.asc_n.row(j));
  return out;
}

namespace {

void negative_sample_into(Rng& rng, int k, NodeIndex u, NodeIndex v,
                          NodeIndex num_nodes, std::span<const double> weight_cdf,
                          std::vector<NodeIndex>& out) {
  if (k < 0) throw std::invalid_argument("negative_sample: k must be >= 0");
  if (k > 0 && num_nodes <= k + 2)
    throw std::invalid_argument("negative_sample: need |V| > k + 2");
  out.clear();
  while (static_cast<int>(out.size()) < k) {
    NodeIndex cand;
    if (weight_cdf.empty()) {
      cand = static_cast<NodeIndex>(rng.index(static_cast<std::size_t>(num_nodes)));
    } else {
      const double x = rng.uniform() * weight_cdf.back();
      cand = static_cast<NodeIndex>(
          std::upper_bound(weight_cdf.begin(), weight_cdf.end(), x) -
          weight_cdf.begin());
      if (cand >= num_nodes) cand = num_nodes - 1;
    }
    if (cand == u || cand == v) continue;  // positives make the term constant
    out.push_back(cand);
  }
}

}  // namespace

std::vector<NodeIndex> negative_sample(Rng& rng, int k, NodeIndex u, NodeIndex v,
                                       NodeIndex num_nodes,
                                       std::span<const double> weight_cdf) {
  std::vector<NodeIndex> out;
  out.reserve(static_cast<std::size_t>(std::max(0, k)));
  negative_sample_into(rng, k, u, v, num_nodes, weight_cdf, out);
  return out;
}

namespace {

void initialize_rows(EmbeddingMatrix& emb, Rng& rng) {
  const int dim = emb.dim();
  RowVec dir(dim);
  for (NodeIndex i = 0; i < emb.node_count(); ++i) {
    if (emb.backend == Backend::Hyperbolic) {
      // uniform in the ball of radius 1e-3: metric factor ~ 1/4, far from
      // the boundary instability
      for (int c = 0; c < dim; ++c) dir[c] = rng.normal();
      const double norm = dir.norm();
      const double r =
          1e-3 * std::pow(rng.uniform(), 1.0 / static_cast<double>(dim));
      if (norm > 0.0)
        emb.rows.row(i) = (r / norm) * dir;
      else
        emb.rows.row(i).setZero();
    } else {
      for (int c = 0; c < dim; ++c) emb.rows(i, c) = 0.1 * rng.normal();
    }
  }
}

struct EpochStats {
  double loss_sum = 0.0;
  std::size_t counted = 0;
  std::size_t skipped = 0;
  std::size_t rejected = 0;
};

}  // namespace

TrainResult train(const WalkCorpus& corpus, NodeIndex num_nodes,
                  const TrainConfig& cfg, const EmbeddingMatrix* warm_start,
                  std::span<const double> negative_weight_cdf,
                  const EpochCallback& on_epoch) {
  if (corpus.walks.empty()) throw std::invalid_argument("train: empty corpus");
  if (cfg.negatives < 1) throw std::invalid_argument("train: negatives must be >= 1");
  if (cfg.lr_initial <= 0.0 || cfg.effective_lr_final() <= 0.0 ||
      cfg.effective_lr_final() > cfg.lr_initial)
    throw std::invalid_argument("train: require 0 < lr_final <= lr_initial");

  TrainResult result;
  EmbeddingMatrix& emb = result.embeddings;
  emb.backend = cfg.backend;
  if (warm_start) {
    if (warm_start->dim() != cfg.dim)
      throw std::invalid_argument("train: warm start dimension " +
                                  std::to_string(warm_start->dim()) +
                                  " != configured " + std::to_string(cfg.dim));
    if (warm_start->node_count() != num_nodes)
      throw std::invalid_argument("train: warm start node count mismatch");
    emb = *warm_start;
    emb.backend = cfg.backend;
    if (cfg.backend == Backend::Hyperbolic)
      for (NodeIndex v = 0; v < num_nodes; ++v)
        if (emb.rows.row(v).squaredNorm() >= 1.0)
          throw std::invalid_argument(
              "train: warm start rows must lie inside the unit ball");
  } else {
    emb.rows.resize(num_nodes, cfg.dim);
    Rng init_rng(derive_seed(cfg.seed, "train-init"));
    initialize_rows(emb, init_rng);
  }

  auto pairs = cooccurrence_pairs(corpus, cfg.window);
  if (pairs.empty()) throw std::invalid_argument("train: no co-occurrence pairs");

  const double lr0 = cfg.lr_initial;
  const double lr1 = cfg.effective_lr_final();
  const std::size_t total_updates =
      static_cast<std::size_t>(cfg.epochs) * pairs.size();
  const auto lr_at = [&](std::size_t step) {
    if (total_updates <= 1) return lr0;
    const double f = static_cast<double>(step) / static_cast<double>(total_updates - 1);
    return lr0 + (lr1 - lr0) * f;
  };

  Rng order_rng(derive_seed(cfg.seed, "train-order"));
  const int threads =
      cfg.deterministic ? 1 : std::max(1, cfg.threads);

  std::atomic<std::size_t> global_step{0};

  const auto run_range = [&](std::size_t begin, std::size_t end, Rng& rng,
                             EpochStats& stats) {
    PairScratch scratch;
    scratch.resize(cfg.dim, cfg.negatives);
    std::vector<NodeIndex> negs;
    negs.reserve(static_cast<std::size_t>(cfg.negatives));
    for (std::size_t p = begin; p < end; ++p) {
      const auto [tu, tv] = pairs[p];
      negative_sample_into(rng, cfg.negatives, tu, tv, num_nodes,
                           negative_weight_cdf, negs);
      const double lr =
          lr_at(global_step.fetch_add(1, std::memory_order_relaxed));
      double loss = 0.0;
      const bool ok = pair_gradients(
          cfg.backend, emb.rows.row(tu), emb.rows.row(tv), cfg.negatives,
          [&](int j) { return emb.rows.row(negs[static_cast<std::size_t>(j)]); },
          scratch, loss);
      if (!ok) {
        ++stats.skipped;
        continue;
      }
      // ascent step on the ranking objective; geometry_step projects back
      // into the ball for the hyperbolic backend
      if (!scratch.asc_u.allFinite() || !scratch.asc_v.allFinite() ||
          !scratch.asc_n.allFinite()) {
        ++stats.rejected;
        continue;
      }
      emb.rows.row(tu) = geometry_step(cfg.backend, emb.rows.row(tu), scratch.asc_u, lr);
      emb.rows.row(tv) = geometry_step(cfg.backend, emb.rows.row(tv), scratch.asc_v, lr);
      for (int j = 0; j < cfg.negatives; ++j) {
        const NodeIndex nj = negs[static_cast<std::size_t>(j)];
        emb.rows.row(nj) =
            geometry_step(cfg.backend, emb.rows.row(nj), scratch.asc_n.row(j), lr);
      }
      stats.loss_sum += loss;
      ++stats.counted;
    }
  };

  for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
    // Fisher-Yates on the shared order stream
    for (std::size_t i = pairs.size(); i > 1; --i)
      std::swap(pairs[i - 1], pairs[order_rng.index(i)]);

    EpochStats total_stats;
    if (threads == 1) {
      Rng rng(derive_seed(cfg.seed, "train-epoch", static_cast<std::uint64_t>(epoch)));
      run_range(0, pairs.size(), rng, total_stats);
    } else {
      std::vector<EpochStats> stats(static_cast<std::size_t>(threads));
      std::vector<Rng> rngs;
      rngs.reserve(static_cast<std::size_t>(threads));
      for (int t = 0; t < threads; ++t)
        rngs.emplace_back(derive_seed(cfg.seed, "train-epoch",
                                      static_cast<std::uint64_t>(epoch),
                                      static_cast<std::uint64_t>(t)));
      std::vector<std::thread> pool;
      const std::size_t chunk = (pairs.size() + threads - 1) / threads;
      for (int t = 0; t < threads; ++t) {
        const std::size_t b = std::min(pairs.size(), t * chunk);
        const std::size_t e = std::min(pairs.size(), b + chunk);
        if (b < e)
          pool.emplace_back(run_range, b, e, std::ref(rngs[static_cast<std::size_t>(t)]),
                            std::ref(stats[static_cast<std::size_t>(t)]));
      }
      for (auto& th : pool) th.join();
      for (const EpochStats& s : stats) {
        total_stats.loss_sum += s.loss_sum;
        total_stats.counted += s.counted;
        total_stats.skipped += s.skipped;
        total_stats.rejected += s.rejected;
      }
    }
    result.skipped_pairs += total_stats.skipped;
    result.rejected_updates += total_stats.rejected;
    const double mean =
        total_stats.counted ? total_stats.loss_sum / static_cast<double>(total_stats.counted) : 0.0;
    result.epoch_mean_loss.push_back(mean);
    if (on_epoch) on_epoch(epoch, mean, emb);
  }
  return result;
}

void save_embeddings(const EmbeddingMatrix& emb, const TemporalHIN& g,
                     const std::string& path,
                     const std::string& footer_comment) {
  if (emb.node_count() != g.node_count())
    throw std::invalid_argument("save_embeddings: row count != node count");
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write embeddings: " + path);
  out << emb.node_count() << ' ' << emb.dim() << ' ' << to_string(emb.backend)
      << '\n';
  char buf[64];
  for (NodeIndex i = 0; i < emb.node_count(); ++i) {
    out << g.node_id(i);
    for (int c = 0; c < emb.dim(); ++c) {
      std::snprintf(buf, sizeof buf, "%.9g", emb.rows(i, c));
      out << (c == 0 ? '\t' : ' ') << buf;
    }
    out << '\n';
  }
  if (!footer_comment.empty()) out << "# " << footer_comment << '\n';
  if (!out) throw std::runtime_error("write failed: " + path);
}

std::pair<std::vector<std::string>, EmbeddingMatrix> load_embeddings_raw(
    const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open embeddings: " + path);
  std::string line;
  if (!std::getline(in, line))
    throw std::runtime_error("empty embeddings file: " + path);
  std::istringstream header(line);
  std::size_t n = 0;
  int dim = 0;
  std::string backend_name;
  if (!(header >> n >> dim >> backend_name))
    throw std::runtime_error("bad embeddings header: " + path);
  EmbeddingMatrix emb;
  emb.backend = backend_from_string(backend_name);
  emb.rows.resize(static_cast<Eigen::Index>(n), dim);
  std::vector<std::string> ids;
  ids.reserve(n);
  for (std::size_t i = 0; i < n; ++i) {
    if (!std::getline(in, line))
      throw std::runtime_error("truncated embeddings file: " + path);
    std::istringstream row(line);
    std::string id;
    if (!(row >> id)) throw std::runtime_error("bad embedding row in " + path);
    ids.push_back(id);
    for (int c = 0; c < dim; ++c) {
      double v = 0.0;
      if (!(row >> v))
        throw std::runtime_error("bad embedding row for node " + id + " in " + path);
      emb.rows(static_cast<Eigen::Index>(i), c) = v;
    }
  }
  return {std::move(ids), std::move(emb)};
}

EmbeddingMatrix load_embeddings(const std::string& path, const TemporalHIN& g) {
  auto [ids, raw] = load_embeddings_raw(path);
  if (static_cast<NodeIndex>(ids.size()) != g.node_count())
    throw std::runtime_error("embeddings cover " + std::to_string(ids.size()) +
                             " nodes, graph has " + std::to_string(g.node_count()));
  EmbeddingMatrix emb;
  emb.backend = raw.backend;
  emb.rows.resize(g.node_count(), raw.dim());
  for (std::size_t i = 0; i < ids.size(); ++i) {
    const NodeIndex v = g.find_node(ids[i]);
    if (v < 0) throw std::runtime_error("embeddings reference unknown node: " + ids[i]);
    emb.rows.row(v) = raw.rows.row(static_cast<Eigen::Index>(i));
  }
  return emb;
}

}  // namespace thembed
