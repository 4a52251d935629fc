#pragma once

#include <Eigen/Core>
#include <cstdint>
#include <unordered_map>
#include <vector>

#include "vecspec/constraints.hpp"
#include "vecspec/embedding.hpp"

namespace vecspec {

// Hyper-parameters of the initial specialization of seen words.
struct ArConfig {
  double delta_attract = 0.6;   // attract margin
  double delta_repel = 0.0;     // repel margin
  double lambda_reg = 1e-9;     // pull toward the original vectors
  std::size_t batch_attract = 50;
  std::size_t batch_repel = 50;
  std::size_t epochs = 5;
  double lr = 0.05;             // Adagrad learning rate
  double epsilon = 1e-8;

  void validate() const;  // throws ConfigError naming the offending field
};

struct IndexPair {
  std::size_t left;
  std::size_t right;
};

// Per-pair negative example rows, mined from the vectors of the current
// attract+repel batches. A pair's negative is never one of its own members.
struct NegativeAssignment {
  std::vector<std::size_t> attract_left;   // t_l per attract pair
  std::vector<std::size_t> attract_right;  // t_r per attract pair
  std::vector<std::size_t> repel_left;
  std::vector<std::size_t> repel_right;
};

// Attract negatives are the nearest pool vectors by cosine, repel negatives
// the farthest. Ties break toward the lowest row index. Throws if fewer than
// three distinct rows occur in the batches. Rows must be unit-normalized.
NegativeAssignment mine_negatives(const Eigen::MatrixXd& vectors,
                                  const std::vector<IndexPair>& batch_attract,
                                  const std::vector<IndexPair>& batch_repel);

// sum_i [ tau(delta + xl.tl - xl.xr) + tau(delta + xr.tr - xl.xr) ]
// Rows of the four matrices are the i-th pair's xl, xr, tl, tr.
double att_loss(const Eigen::MatrixXd& xl, const Eigen::MatrixXd& xr,
                const Eigen::MatrixXd& tl, const Eigen::MatrixXd& tr,
                double delta);

// sum_i [ tau(delta - xl.tl + xl.xr) + tau(delta - xr.tr + xl.xr) ]
double rep_loss(const Eigen::MatrixXd& xl, const Eigen::MatrixXd& xr,
                const Eigen::MatrixXd& tl, const Eigen::MatrixXd& tr,
                double delta);

// sum_i lambda * ||current_i - original_i||_2  (plain L2 norm, not squared)
double pre_loss(const Eigen::MatrixXd& current, const Eigen::MatrixXd& originals,
                double lambda);

// Loss and sparse per-row gradients for one (attract batch, repel batch)
// step. All batch-member vectors are trainable, negatives included; the
// pre term anchors each distinct batch member to its original vector.
struct ArStepLosses {
  double att = 0.0;
  double rep = 0.0;
  double pre = 0.0;
  double total() const { return att + rep + pre; }
};

ArStepLosses ar_step_loss_and_grads(
    const Eigen::MatrixXd& current, const Eigen::MatrixXd& originals,
    const std::vector<IndexPair>& batch_attract,
    const std::vector<IndexPair>& batch_repel, const NegativeAssignment& negs,
    const ArConfig& cfg,
    std::unordered_map<std::size_t, Eigen::RowVectorXd>* grads);

struct ArEpochStats {
  std::size_t epoch = 0;
  double att = 0.0;
  double rep = 0.0;
  double pre = 0.0;
  double total = 0.0;
};

struct ArResult {
  EmbeddingSpace space;
  std::vector<ArEpochStats> epochs;
};

// Fine-tunes only the rows of words occurring in the constraints; every
// other row of the result is bitwise identical to the input. The space must
// be unit-normalized; updated rows are re-normalized after each epoch.
ArResult specialize(const EmbeddingSpace& space, const ConstraintSet& cs,
                    const ArConfig& cfg, std::uint64_t seed);

}  // namespace vecspec
