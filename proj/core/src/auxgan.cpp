#include "vecspec/auxgan.hpp"

#include <algorithm>
#include <cmath>

#include "vecspec/errors.hpp"

namespace vecspec {

void AuxGanConfig::validate() const {
  PostSpecConfig::validate();
  if (d_steps < 1) throw ConfigError("d_steps", "must be >= 1");
  if (label_smoothing < 0.0 || label_smoothing >= 0.5) {
    throw ConfigError("label_smoothing", "must be in [0, 0.5)");
  }
  if (d_dropout < 0.0 || d_dropout >= 1.0) throw ConfigError("d_dropout", "must be in [0,1)");
  if (d_lr <= 0.0) throw ConfigError("d_lr", "must be > 0");
}

double softmax2_cross_entropy(const Eigen::MatrixXd& probs, int true_class,
                              double smoothing, Eigen::MatrixXd* dlogits) {
  if (probs.cols() != 2) throw Error("softmax2_cross_entropy: expected 2 columns");
  if (true_class != 0 && true_class != 1) {
    throw Error("softmax2_cross_entropy: class must be 0 or 1");
  }
  const double t_true = 1.0 - smoothing;
  const double t_other = smoothing;
  if (dlogits) dlogits->resize(probs.rows(), 2);

  double loss = 0.0;
  for (Eigen::Index i = 0; i < probs.rows(); ++i) {
    const double p_true = std::max(probs(i, true_class), 1e-12);
    const double p_other = std::max(probs(i, 1 - true_class), 1e-12);
    loss += -t_true * std::log(p_true) - t_other * std::log(p_other);
    if (dlogits) {
      (*dlogits)(i, true_class) = probs(i, true_class) - t_true;
      (*dlogits)(i, 1 - true_class) = probs(i, 1 - true_class) - t_other;
    }
  }
  return loss;
}

double d_loss(const MlpNetwork& d, const Eigen::MatrixXd& generated,
              const Eigen::MatrixXd& real_specialized, double smoothing) {
  const ForwardCache gen = forward(d, generated, Mode::Eval);
  const ForwardCache real = forward(d, real_specialized, Mode::Eval);
  return softmax2_cross_entropy(gen.output, 0, smoothing) +
         softmax2_cross_entropy(real.output, 1, smoothing);
}

double g_adv_loss(const MlpNetwork& d, const Eigen::MatrixXd& generated,
                  const Eigen::MatrixXd& real_specialized, double smoothing) {
  const ForwardCache gen = forward(d, generated, Mode::Eval);
  const ForwardCache real = forward(d, real_specialized, Mode::Eval);
  return softmax2_cross_entropy(gen.output, 1, smoothing) +
         softmax2_cross_entropy(real.output, 0, smoothing);
}

namespace {

Eigen::MatrixXd gather(const Eigen::MatrixXd& m, const std::vector<std::size_t>& rows) {
  Eigen::MatrixXd out(static_cast<Eigen::Index>(rows.size()), m.cols());
  for (std::size_t i = 0; i < rows.size(); ++i) {
    out.row(static_cast<Eigen::Index>(i)) = m.row(static_cast<Eigen::Index>(rows[i]));
  }
  return out;
}

}  // namespace

AuxGanTrainer::AuxGanTrainer(const TrainPairs& train, const AuxGanConfig& cfg,
                             Rng& rng)
    : train_(train), cfg_(cfg), rng_(rng) {
  const Eigen::Index dim = train.x.cols();
  std::vector<double> g_rates(cfg.hidden_count + 1, cfg.g_dropout);
  g_ = make_mlp(dim, cfg.hidden_count, cfg.hidden_size, dim, OutputKind::Linear,
                cfg.leaky_slope, g_rates, rng_);
  std::vector<double> d_rates(cfg.hidden_count + 1, 0.0);
  d_rates[0] = cfg.d_dropout;  // input layer only
  d_ = make_mlp(dim, cfg.hidden_count, cfg.hidden_size, 2, OutputKind::Softmax2,
                cfg.leaky_slope, d_rates, rng_);
  g_opt_ = make_optimizer(g_, OptimizerKind::Sgd, cfg.lr);
  d_opt_ = make_optimizer(d_, OptimizerKind::Sgd, cfg.d_lr);
}

double AuxGanTrainer::discriminator_step(const std::vector<std::size_t>& gen_rows,
                                         const std::vector<std::size_t>& real_rows) {
  // Batches fed to D are pure: all generated, then all real.
  const Eigen::MatrixXd generated =
      forward(g_, gather(train_.x, gen_rows), Mode::Train, &rng_).output;
  const Eigen::MatrixXd real = gather(train_.y, real_rows);

  // Both pure batches contribute to one combined update; two alternating
  // single-class updates would only teach D the constant label.
  double loss = 0.0;
  ForwardCache gen_cache = forward(d_, generated, Mode::Train, &rng_);
  Eigen::MatrixXd gen_dlogits;
  loss += softmax2_cross_entropy(gen_cache.output, 0, cfg_.label_smoothing, &gen_dlogits);
  gen_dlogits /= static_cast<double>(generated.rows());

  ForwardCache real_cache = forward(d_, real, Mode::Train, &rng_);
  Eigen::MatrixXd real_dlogits;
  loss += softmax2_cross_entropy(real_cache.output, 1, cfg_.label_smoothing, &real_dlogits);
  real_dlogits /= static_cast<double>(real.rows());

  if (!std::isfinite(loss)) throw TrainingError("discriminator_step: non-finite loss");
  Gradients grads = backward(d_, gen_cache, gen_dlogits);
  grads.accumulate(backward(d_, real_cache, real_dlogits));
  apply_gradients(d_, grads, d_opt_);
  return loss;
}

double AuxGanTrainer::generator_adversarial_step(
    const std::vector<std::size_t>& gen_rows,
    const std::vector<std::size_t>& real_rows) {
  const double smoothing = cfg_.smooth_g_loss ? cfg_.label_smoothing : 0.0;

  ForwardCache g_cache = forward(g_, gather(train_.x, gen_rows), Mode::Train, &rng_);
  ForwardCache d_cache = forward(d_, g_cache.output, Mode::Train, &rng_);

  Eigen::MatrixXd dlogits;
  double loss = softmax2_cross_entropy(d_cache.output, 1, smoothing, &dlogits);
  dlogits /= static_cast<double>(gen_rows.size());

  // Gradient flows through D into the generated batch; D itself is frozen.
  const Gradients d_grads = backward(d_, d_cache, dlogits);
  const Gradients g_grads = backward(g_, g_cache, d_grads.dinput);
  apply_gradients(g_, g_grads, g_opt_);

  // Real-side term of the swapped-label loss: reporting only, no gradient
  // reaches G through vectors it did not produce.
  loss += softmax2_cross_entropy(
      forward(d_, gather(train_.y, real_rows), Mode::Eval).output, 0, smoothing);
  if (!std::isfinite(loss)) throw TrainingError("generator_adversarial_step: non-finite loss");
  return loss;
}

double AuxGanTrainer::mm_step(const std::vector<std::size_t>& rows) {
  return mm_training_step(g_, g_opt_, gather(train_.x, rows),
                          gather(train_.y, rows), cfg_, rng_);
}

double AuxGanTrainer::held_out_d_accuracy(const TrainPairs& val) {
  if (val.count() == 0) return 0.0;
  const Eigen::MatrixXd generated = forward(g_, val.x, Mode::Eval).output;
  const Eigen::MatrixXd p_gen = forward(d_, generated, Mode::Eval).output;
  const Eigen::MatrixXd p_real = forward(d_, val.y, Mode::Eval).output;
  std::size_t correct = 0;
  for (Eigen::Index i = 0; i < p_gen.rows(); ++i) {
    if (p_gen(i, 0) > 0.5) ++correct;
    if (p_real(i, 1) > 0.5) ++correct;
  }
  return static_cast<double>(correct) / static_cast<double>(2 * val.count());
}

namespace {

class IndexStream {
 public:
  IndexStream(std::size_t n, Rng& rng) : rng_(rng), order_(n) {
    for (std::size_t i = 0; i < n; ++i) order_[i] = i;
    rng_.shuffle(order_);
  }
  std::vector<std::size_t> next(std::size_t k) {
    std::vector<std::size_t> out;
    out.reserve(k);
    while (out.size() < k) {
      if (cursor_ == order_.size()) {
        rng_.shuffle(order_);
        cursor_ = 0;
      }
      out.push_back(order_[cursor_++]);
    }
    return out;
  }

 private:
  Rng& rng_;
  std::vector<std::size_t> order_;
  std::size_t cursor_ = 0;
};

}  // namespace

AuxGanResult train_auxgan(const TrainPairs& pairs, const AuxGanConfig& cfg,
                          std::uint64_t seed) {
  cfg.validate();
  if (pairs.count() == 0) throw Error("train_auxgan: no training pairs");
  if (static_cast<std::size_t>(pairs.count()) < cfg.batch_size) {
    throw Error("train_auxgan: need at least batch_size (" +
                std::to_string(cfg.batch_size) + ") pairs, got " +
                std::to_string(pairs.count()));
  }

  Rng rng(seed);
  const PairSplit split = split_validation(pairs, cfg.validation_fraction, rng);

  AuxGanTrainer trainer(split.train, cfg, rng);
  IndexStream stream(static_cast<std::size_t>(split.train.count()), rng);

  const std::size_t iters =
      cfg.iterations_per_epoch > 0
          ? cfg.iterations_per_epoch
          : std::max<std::size_t>(
                1, static_cast<std::size_t>(split.train.count()) / cfg.batch_size);
  const std::size_t check_every = std::max<std::size_t>(1, iters / 10);

  AuxGanResult result;
  double best_val = -2.0;
  double best_val_at_collapse_watch = -2.0;
  int collapse_checks = 0;

  double d_sum = 0.0, g_sum = 0.0, mm_sum = 0.0;
  std::size_t d_samples = 0, g_samples = 0, mm_batches = 0;

  const TrainPairs& val = split.val.count() > 0 ? split.val : split.train;

  for (std::size_t epoch = 1; epoch <= cfg.epochs; ++epoch) {
    for (std::size_t it = 0; it < iters; ++it) {
      // One cycle: s steps of L_D, one step of L_G, one step of L_MM.
      for (std::size_t s = 0; s < cfg.d_steps; ++s) {
        d_sum += trainer.discriminator_step(stream.next(cfg.batch_size),
                                            stream.next(cfg.batch_size));
        d_samples += 2 * cfg.batch_size;
      }
      g_sum += trainer.generator_adversarial_step(stream.next(cfg.batch_size),
                                                  stream.next(cfg.batch_size));
      g_samples += 2 * cfg.batch_size;
      mm_sum += trainer.mm_step(stream.next(cfg.batch_size));
      mm_batches += 1;

      if ((it + 1) % check_every == 0 || it + 1 == iters) {
        AuxGanCheck check;
        check.epoch = epoch;
        check.progress = static_cast<double>(it + 1) / static_cast<double>(iters);
        check.d_loss_mean = d_samples ? d_sum / static_cast<double>(d_samples) : 0.0;
        check.g_adv_loss_mean = g_samples ? g_sum / static_cast<double>(g_samples) : 0.0;
        check.mm_loss_mean = mm_batches ? mm_sum / static_cast<double>(mm_batches) : 0.0;
        check.val_cosine = mean_mapped_cosine(trainer.generator(), val);
        check.d_accuracy = trainer.held_out_d_accuracy(val);
        check.lr = trainer.generator_opt().lr;
        result.log.push_back(check);

        // Mode-collapse symptom: a saturated discriminator while the
        // generator stopped improving.
        if (check.d_loss_mean < 0.01 && check.val_cosine <= best_val_at_collapse_watch) {
          if (++collapse_checks >= 3) {
            throw TrainingError(
                "train_auxgan: discriminator loss collapsed for 3 consecutive "
                "checks with no generator improvement");
          }
        } else {
          collapse_checks = 0;
          best_val_at_collapse_watch = std::max(best_val_at_collapse_watch, check.val_cosine);
        }

        d_sum = g_sum = mm_sum = 0.0;
        d_samples = g_samples = 0;
        mm_batches = 0;
      }
    }

    const double val_cos = result.log.back().val_cosine;
    const double factor = val_cos > best_val ? cfg.decay : cfg.plateau_decay;
    best_val = std::max(best_val, val_cos);
    trainer.generator_opt().lr *= factor;
    trainer.discriminator_opt().lr *= factor;
  }

  result.final_val_cosine = result.log.back().val_cosine;
  result.generator = std::move(trainer.generator());
  return result;
}

}  // namespace vecspec
