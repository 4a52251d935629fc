#pragma once

#include <Eigen/Core>
#include <cstdint>
#include <vector>

#include "vecspec/embedding.hpp"
#include "vecspec/nn.hpp"

namespace vecspec {

// Row-aligned (original, specialized) training vectors for seen words.
struct TrainPairs {
  Eigen::MatrixXd x;  // original vectors
  Eigen::MatrixXd y;  // initially specialized vectors

  Eigen::Index count() const { return x.rows(); }
};

// Pairs for words present in both spaces whose vector actually changed;
// words the initial specialization left untouched only teach the identity.
TrainPairs changed_pairs(const EmbeddingSpace& original,
                         const EmbeddingSpace& specialized);

struct PostSpecConfig {
  double margin = 0.6;                  // delta_MM
  std::size_t negatives_per_pair = 25;  // k, sampled in-batch
  std::size_t batch_size = 32;
  std::size_t epochs = 10;
  std::size_t iterations_per_epoch = 0;  // 0: one pass over the pairs
  double lr = 0.1;
  double decay = 0.98;          // per-epoch learning-rate factor
  double plateau_decay = 0.5;   // applied instead when validation stalls
  double validation_fraction = 0.05;

  // Generator architecture.
  std::size_t hidden_count = 2;
  Eigen::Index hidden_size = 2048;
  double leaky_slope = 0.2;
  double g_dropout = 0.2;  // input and each hidden activation

  void validate() const;
};

// Eq-style margin ranking loss with in-batch negatives:
//   sum_i sum_{j in negatives[i]} tau(margin - cos(pred_i, y_i) + cos(pred_i, y_j))
// negatives[i] must not contain i. When pred_grads is non-null it receives
// dL/d(preds).
double mm_loss(const Eigen::MatrixXd& preds, const Eigen::MatrixXd& targets,
               const std::vector<std::vector<std::size_t>>& negatives,
               double margin, Eigen::MatrixXd* pred_grads = nullptr);

// k distinct in-batch negatives per row, never the row itself.
std::vector<std::vector<std::size_t>> sample_negatives(std::size_t batch_size,
                                                       std::size_t k, Rng& rng);

// One SGD step of the max-margin objective on the generator; returns the
// batch loss. Shared by the plain trainer and the adversarial one.
double mm_training_step(MlpNetwork& g, OptimizerState& opt,
                        const Eigen::MatrixXd& x_batch,
                        const Eigen::MatrixXd& y_batch,
                        const PostSpecConfig& cfg, Rng& rng);

// Mean eval-mode cosine(G(x), y) over the given pairs.
double mean_mapped_cosine(const MlpNetwork& g, const TrainPairs& pairs);

struct PairSplit {
  TrainPairs train;
  TrainPairs val;
};

// Seed-fixed held-out split used for the validation cosine score.
PairSplit split_validation(const TrainPairs& pairs, double fraction, Rng& rng);

struct EpochLog {
  std::size_t epoch = 0;
  double train_loss = 0.0;  // mean per-iteration mm loss
  double val_cosine = 0.0;
  double lr = 0.0;
};

struct PostSpecResult {
  MlpNetwork net;
  std::vector<EpochLog> log;
  double final_val_cosine = 0.0;
};

// Learns the global specialization map G from (original, specialized) pairs.
// Holds out validation_fraction of the pairs (fixed by seed) for the
// mean-cosine validation score that drives the learning-rate schedule.
PostSpecResult train_postspec(const TrainPairs& pairs, const PostSpecConfig& cfg,
                              std::uint64_t seed);

// Transforms every row in eval mode (deterministic) and re-unit-normalizes.
EmbeddingSpace apply_map(const MlpNetwork& net, const EmbeddingSpace& space);

}  // namespace vecspec
