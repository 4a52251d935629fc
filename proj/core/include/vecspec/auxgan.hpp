#pragma once

#include <Eigen/Core>
#include <cstdint>
#include <vector>

#include "vecspec/nn.hpp"
#include "vecspec/postspec.hpp"

namespace vecspec {

struct AuxGanConfig : PostSpecConfig {
  std::size_t d_steps = 5;       // discriminator steps per cycle
  double label_smoothing = 0.1;  // golden labels become (1-s, s)
  double d_dropout = 0.1;        // discriminator input layer only
  double d_lr = 0.1;
  bool smooth_g_loss = true;     // apply smoothing to the swapped labels too

  void validate() const;
};

// Smoothed 2-way softmax cross-entropy of a batch whose true class is
// `true_class`; probabilities are clamped at 1e-12 before the log. When
// dlogits is non-null it receives d(loss)/d(logits) = p - t.
double softmax2_cross_entropy(const Eigen::MatrixXd& probs, int true_class,
                              double smoothing, Eigen::MatrixXd* dlogits = nullptr);

// Eq-style discriminator loss (class 1 = genuinely specialized):
//   -sum log P(0 | generated) - sum log P(1 | real), smoothed targets.
// Value-only, eval-mode forward.
double d_loss(const MlpNetwork& d, const Eigen::MatrixXd& generated,
              const Eigen::MatrixXd& real_specialized, double smoothing);

// Label-swapped generator loss:
//   -sum log P(1 | generated) - sum log P(0 | real), smoothed targets.
double g_adv_loss(const MlpNetwork& d, const Eigen::MatrixXd& generated,
                  const Eigen::MatrixXd& real_specialized, double smoothing);

struct AuxGanCheck {
  std::size_t epoch = 0;
  double progress = 0.0;  // fraction of the epoch completed
  double d_loss_mean = 0.0;      // per-sample, recent d steps
  double g_adv_loss_mean = 0.0;  // per-sample, recent cycles
  double mm_loss_mean = 0.0;     // per-batch, recent cycles
  double val_cosine = 0.0;
  double d_accuracy = 0.0;  // held-out real-vs-generated accuracy
  double lr = 0.0;
};

struct AuxGanResult {
  MlpNetwork generator;
  std::vector<AuxGanCheck> log;
  double final_val_cosine = 0.0;
};

// Owns both networks during training; exposes the three step kinds so that
// update isolation is directly checkable.
class AuxGanTrainer {
 public:
  AuxGanTrainer(const TrainPairs& train, const AuxGanConfig& cfg, Rng& rng);

  // s of these per cycle: update D on one all-generated and one all-real
  // batch. Returns the summed d loss over the two batches.
  double discriminator_step(const std::vector<std::size_t>& gen_rows,
                            const std::vector<std::size_t>& real_rows);

  // One adversarial step: update G so D calls its outputs specialized.
  // The real-batch term carries no G gradient and is included in the
  // returned value for reporting only.
  double generator_adversarial_step(const std::vector<std::size_t>& gen_rows,
                                    const std::vector<std::size_t>& real_rows);

  // One max-margin step on G.
  double mm_step(const std::vector<std::size_t>& rows);

  double held_out_d_accuracy(const TrainPairs& val);

  MlpNetwork& generator() { return g_; }
  MlpNetwork& discriminator() { return d_; }
  OptimizerState& generator_opt() { return g_opt_; }
  OptimizerState& discriminator_opt() { return d_opt_; }

 private:
  const TrainPairs& train_;
  AuxGanConfig cfg_;
  Rng& rng_;
  MlpNetwork g_;
  MlpNetwork d_;
  OptimizerState g_opt_;
  OptimizerState d_opt_;
};

// Alternates s discriminator steps, one adversarial generator step and one
// max-margin step per cycle; discards the discriminator. Aborts with
// TrainingError if the discriminator loss collapses (< 0.01 per sample) for
// three consecutive validation checks without generator improvement.
AuxGanResult train_auxgan(const TrainPairs& pairs, const AuxGanConfig& cfg,
                          std::uint64_t seed);

}  // namespace vecspec
