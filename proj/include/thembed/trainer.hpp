#ifndef THEMBED_TRAINER_HPP
#define THEMBED_TRAINER_HPP

#include <Eigen/Core>
#include <cstdint>
#include <functional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "thembed/geometry.hpp"
#include "thembed/graph.hpp"
#include "thembed/rng.hpp"
#include "thembed/types.hpp"
#include "thembed/walker.hpp"

namespace thembed {

// One d-dimensional point per node. With the hyperbolic backend every row
// stays strictly inside the unit ball.
struct EmbeddingMatrix {
  Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor> rows;
  Backend backend = Backend::Hyperbolic;

  NodeIndex node_count() const { return static_cast<NodeIndex>(rows.rows()); }
  int dim() const { return static_cast<int>(rows.cols()); }
};

struct TrainConfig {
  int dim = 128;
  int negatives = 5;        // k negative samples per co-occurrence pair
  int window = 5;           // context radius within a walk
  int epochs = 5;
  double lr_initial = 0.001;
  double lr_final = -1.0;   // <0: lr_initial / 10
  std::uint64_t seed = 1;
  bool deterministic = true;  // false: lock-free parallel row updates
  int threads = 1;
  Backend backend = Backend::Hyperbolic;
  bool degree_negatives = false;

  double effective_lr_final() const {
    return lr_final < 0.0 ? lr_initial / 10.0 : lr_final;
  }
};

// All (target, context) pairs with |i - j| <= window inside each walk;
// self-pairs from repeated nodes are dropped.
std::vector<std::pair<NodeIndex, NodeIndex>> cooccurrence_pairs(
    const WalkCorpus& corpus, int window);

// sigma(-d(u,v)) under the active backend.
double cooccurrence_probability(Backend backend, Eigen::Ref<const RowVec> u,
                                Eigen::Ref<const RowVec> v);

// numerically stable sigma and log(sigma)
double sigmoid(double x);
double log_sigmoid(double x);

// Ranking loss for one positive pair against k negatives:
//   loss = -sum_j log sigma(d(u, n_j) - d(u, v))
// Gradients are of this minimized loss (move along -grad to descend). A
// coincident (u, v) marks the result singular and the caller skips the pair;
// a coincident (u, n_j) only zeroes that negative's gradient contribution.
struct PairLossResult {
  double loss = 0.0;
  RowVec grad_u;
  RowVec grad_v;
  std::vector<RowVec> grad_negatives;
  bool singular = false;
};
PairLossResult pair_loss(Backend backend, Eigen::Ref<const RowVec> u,
                         Eigen::Ref<const RowVec> v,
                         const std::vector<RowVec>& negatives);

// k indices uniform over [0, num_nodes), resampling draws that hit u or v.
// When weight_cdf is given (cumulative, last element = total mass) draws are
// proportional to the weights instead.
std::vector<NodeIndex> negative_sample(Rng& rng, int k, NodeIndex u, NodeIndex v,
                                       NodeIndex num_nodes,
                                       std::span<const double> weight_cdf = {});

struct TrainResult {
  EmbeddingMatrix embeddings;
  std::vector<double> epoch_mean_loss;
  std::size_t skipped_pairs = 0;     // singular positive pairs
  std::size_t rejected_updates = 0;  // non-finite gradients
};

using EpochCallback =
    std::function<void(int epoch, double mean_loss, const EmbeddingMatrix&)>;

// Riemannian negative-sampling SGD over the shuffled co-occurrence stream.
// Rows initialize uniformly in a ball of radius 1e-3 (hyperbolic) or as
// N(0, 1e-2) coordinates (euclidean); the learning rate decays linearly.
// Deterministic mode updates sequentially and reproduces bit-identical
// matrices for a fixed seed.
TrainResult train(const WalkCorpus& corpus, NodeIndex num_nodes,
                  const TrainConfig& cfg,
                  const EmbeddingMatrix* warm_start = nullptr,
                  std::span<const double> negative_weight_cdf = {},
                  const EpochCallback& on_epoch = {});

// Text format: header "|V| d backend", then "node_id\tc1 c2 ... cd" with 9
// significant digits per coordinate. Trailing '#' lines are ignored on load.
void save_embeddings(const EmbeddingMatrix& emb, const TemporalHIN& g,
                     const std::string& path,
                     const std::string& footer_comment = {});
EmbeddingMatrix load_embeddings(const std::string& path, const TemporalHIN& g);
std::pair<std::vector<std::string>, EmbeddingMatrix> load_embeddings_raw(
    const std::string& path);

}  // namespace thembed

#endif
