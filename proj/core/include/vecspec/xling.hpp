#pragma once

#include <Eigen/Core>
#include <cstdint>
#include <string>
#include <vector>

#include "vecspec/embedding.hpp"
#include "vecspec/nn.hpp"

namespace vecspec {

// Linear map between two monolingual spaces. Maps target vectors into the
// source space; applied to row vectors as x * w^T.
struct AlignmentMap {
  Eigen::MatrixXd w;

  // ||W W^T - I||_F
  double orthogonality_error() const;
};

// d x d matrix in the embedding text convention ("d d" header, one row per
// line, round-trip-exact decimals).
void save_alignment(const AlignmentMap& map, const std::string& path);
AlignmentMap load_alignment(const std::string& path);

struct AlignConfig {
  // Discriminator mirrors the adversarial post-specialization one, but
  // without dropout.
  std::size_t hidden_count = 2;
  Eigen::Index hidden_size = 2048;
  double leaky_slope = 0.2;
  double label_smoothing = 0.1;
  std::size_t d_steps = 5;
  std::size_t batch_size = 32;
  std::size_t epochs = 5;
  std::size_t iterations_per_epoch = 0;  // 0: max(|V_s|,|V_t|)/batch_size
  double lr = 0.1;    // map learning rate (SGD)
  double d_lr = 0.1;
  // Flat by default: the best-metric map already guards against regressions,
  // and halving the rate on a stalled metric strands the game where it is.
  double decay = 1.0;
  double plateau_decay = 1.0;
  double ortho_beta = 0.01;  // W <- (1+b)W - b(WW^T)W after each map update
  std::size_t csls_k = 10;
  std::size_t dict_top_n = 10000;   // vocabulary cutoff for dictionaries
  std::size_t val_dict_size = 5000; // pairs for the unsupervised metric
  std::size_t patience = 20;        // metric checks without improvement
  std::size_t n_refine = 5;

  void validate() const;
};

// Mean cosine of each query row to its k nearest candidate rows. Rows must
// be unit-normalized. Throws when k exceeds the candidate count.
Eigen::VectorXd mean_topk_cosine(const Eigen::MatrixXd& queries,
                                 const Eigen::MatrixXd& candidates,
                                 std::size_t k);

// CSLS(x, y) = 2 cos(x, y) - r_query - r_candidates[y]; r_query is the mean
// cosine of x to its k nearest candidates and r_candidates the corresponding
// precomputed statistic per candidate against the query set.
Eigen::VectorXd csls_scores(const Eigen::RowVectorXd& query,
                            const Eigen::MatrixXd& candidates, std::size_t k,
                            double r_query, const Eigen::VectorXd& r_candidates);

struct DictionaryEntry {
  std::size_t source;
  std::size_t target;
  double score;  // CSLS score of the pair
};

struct SyntheticDictionary {
  std::vector<DictionaryEntry> entries;
};

// CSLS-mutual-best pairs between the first top_n words of each space, with
// the map applied to the target side. Throws when no mutual pair survives
// (a failed alignment).
SyntheticDictionary build_dictionary(const EmbeddingSpace& source,
                                     const EmbeddingSpace& target,
                                     const AlignmentMap& map, std::size_t k,
                                     std::size_t top_n);

// Closed-form orthogonal solution of min ||W X_t - X_s||_F from the SVD of
// the cross-covariance. Rows of the arguments are paired vectors; requires
// at least dim pairs. Warns on stderr when the cross-covariance is
// rank-deficient (solution non-unique).
AlignmentMap procrustes(const Eigen::MatrixXd& target_rows,
                        const Eigen::MatrixXd& source_rows);

struct AlignCheck {
  std::size_t epoch = 0;
  double progress = 0.0;
  double d_loss_mean = 0.0;
  double adv_loss_mean = 0.0;
  double metric = 0.0;  // mean cosine over a fresh CSLS dictionary
  double ortho_error = 0.0;
};

struct AlignResult {
  AlignmentMap map;  // best map under the unsupervised metric
  std::vector<AlignCheck> log;
  double best_metric = 0.0;
  bool metric_improved = false;
};

// Unsupervised adversarial alignment: a linear map (identity-initialized,
// kept near-orthogonal) against a discriminator separating mapped-target
// from source vectors. Early-stops on the CSLS-dictionary cosine metric.
AlignResult adv_align(const EmbeddingSpace& source, const EmbeddingSpace& target,
                      const AlignConfig& cfg, std::uint64_t seed);

// Adversarial training is stochastic; restarts with derived seeds are ranked
// by the same unsupervised metric and the best run wins. A run whose metric
// reaches good_enough skips the remaining restarts.
AlignResult adv_align_restarts(const EmbeddingSpace& source,
                               const EmbeddingSpace& target,
                               const AlignConfig& cfg, std::uint64_t seed,
                               std::size_t n_restarts,
                               double good_enough = 2.0);

struct RefineResult {
  AlignmentMap map;
  std::vector<double> dict_mean_cosine;  // one value per refinement pass
};

// n_refine rounds of dictionary extraction + Procrustes re-estimation.
RefineResult refine_alignment(const EmbeddingSpace& source,
                              const EmbeddingSpace& target,
                              const AlignmentMap& initial,
                              const AlignConfig& cfg);

// Y_t = G(W x_t) for every target word, unit-normalized.
EmbeddingSpace zero_shot_specialize(const AlignmentMap& map,
                                    const EmbeddingSpace& target,
                                    const MlpNetwork& generator);

}  // namespace vecspec
