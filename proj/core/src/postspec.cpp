#include "vecspec/postspec.hpp"

#include <algorithm>
#include <cmath>

#include "vecspec/errors.hpp"

namespace vecspec {

TrainPairs changed_pairs(const EmbeddingSpace& original,
                         const EmbeddingSpace& specialized) {
  if (original.dim() != specialized.dim()) {
    throw Error("changed_pairs: dimension mismatch between spaces");
  }
  std::vector<Eigen::Index> rows;
  for (std::size_t i = 0; i < original.size(); ++i) {
    auto it = specialized.index.find(original.words[i]);
    if (it == specialized.index.end()) continue;
    const Eigen::Index oi = static_cast<Eigen::Index>(i);
    const Eigen::Index si = static_cast<Eigen::Index>(it->second);
    if (original.matrix.row(oi) != specialized.matrix.row(si)) {
      rows.push_back(oi);
    }
  }
  TrainPairs out;
  out.x.resize(static_cast<Eigen::Index>(rows.size()), original.dim());
  out.y.resize(static_cast<Eigen::Index>(rows.size()), original.dim());
  for (std::size_t k = 0; k < rows.size(); ++k) {
    const Eigen::Index oi = rows[k];
    out.x.row(static_cast<Eigen::Index>(k)) = original.matrix.row(oi);
    out.y.row(static_cast<Eigen::Index>(k)) = specialized.matrix.row(
        static_cast<Eigen::Index>(specialized.index.at(original.words[static_cast<std::size_t>(oi)])));
  }
  return out;
}

void PostSpecConfig::validate() const {
  if (margin < 0.0) throw ConfigError("margin", "must be >= 0");
  if (negatives_per_pair < 1) throw ConfigError("negatives_per_pair", "must be >= 1");
  if (batch_size <= negatives_per_pair) {
    throw ConfigError("batch_size", "must exceed negatives_per_pair (negatives are sampled in-batch)");
  }
  if (epochs < 1) throw ConfigError("epochs", "must be >= 1");
  if (lr <= 0.0) throw ConfigError("lr", "must be > 0");
  if (decay <= 0.0 || decay > 1.0) throw ConfigError("decay", "must be in (0,1]");
  if (plateau_decay <= 0.0 || plateau_decay > 1.0) {
    throw ConfigError("plateau_decay", "must be in (0,1]");
  }
  if (validation_fraction < 0.0 || validation_fraction >= 1.0) {
    throw ConfigError("validation_fraction", "must be in [0,1)");
  }
  if (hidden_count < 1) throw ConfigError("hidden_count", "must be >= 1");
  if (hidden_size < 1) throw ConfigError("hidden_size", "must be >= 1");
  if (g_dropout < 0.0 || g_dropout >= 1.0) throw ConfigError("g_dropout", "must be in [0,1)");
}

double mm_loss(const Eigen::MatrixXd& preds, const Eigen::MatrixXd& targets,
               const std::vector<std::vector<std::size_t>>& negatives,
               double margin, Eigen::MatrixXd* pred_grads) {
  if (preds.rows() != targets.rows() || preds.cols() != targets.cols()) {
    throw Error("mm_loss: preds/targets shape mismatch");
  }
  if (negatives.size() != static_cast<std::size_t>(preds.rows())) {
    throw Error("mm_loss: one negative list per batch row required");
  }
  if (pred_grads) pred_grads->setZero(preds.rows(), preds.cols());

  double loss = 0.0;
  for (Eigen::Index i = 0; i < preds.rows(); ++i) {
    const Eigen::RowVectorXd p = preds.row(i);
    const double pn = p.norm();
    if (pn == 0.0) throw Error("mm_loss: zero-norm prediction");
    const Eigen::RowVectorXd yi = targets.row(i);
    const double yin = yi.norm();
    const double cos_pos = p.dot(yi) / (pn * yin);

    for (std::size_t j : negatives[static_cast<std::size_t>(i)]) {
      if (static_cast<Eigen::Index>(j) == i) {
        throw Error("mm_loss: negative list for row " + std::to_string(i) +
                    " contains the row itself");
      }
      const Eigen::RowVectorXd yj = targets.row(static_cast<Eigen::Index>(j));
      const double yjn = yj.norm();
      const double cos_neg = p.dot(yj) / (pn * yjn);
      const double z = margin - cos_pos + cos_neg;
      if (z > 0.0) {
        loss += z;
        if (pred_grads) {
          // d cos(p, y)/dp = y/(|p||y|) - cos * p/|p|^2
          const Eigen::RowVectorXd dpos = yi / (pn * yin) - (cos_pos / (pn * pn)) * p;
          const Eigen::RowVectorXd dneg = yj / (pn * yjn) - (cos_neg / (pn * pn)) * p;
          pred_grads->row(i) += dneg - dpos;
        }
      }
    }
  }
  return loss;
}

std::vector<std::vector<std::size_t>> sample_negatives(std::size_t batch_size,
                                                       std::size_t k, Rng& rng) {
  if (batch_size <= k) {
    throw Error("sample_negatives: batch too small for " + std::to_string(k) +
                " in-batch negatives");
  }
  std::vector<std::vector<std::size_t>> out(batch_size);
  for (std::size_t i = 0; i < batch_size; ++i) {
    out[i] = rng.sample_excluding(batch_size, k, i);
  }
  return out;
}

double mm_training_step(MlpNetwork& g, OptimizerState& opt,
                        const Eigen::MatrixXd& x_batch,
                        const Eigen::MatrixXd& y_batch,
                        const PostSpecConfig& cfg, Rng& rng) {
  ForwardCache cache = forward(g, x_batch, Mode::Train, &rng);
  const auto negs = sample_negatives(static_cast<std::size_t>(x_batch.rows()),
                                     cfg.negatives_per_pair, rng);
  Eigen::MatrixXd dpred;
  const double loss = mm_loss(cache.output, y_batch, negs, cfg.margin, &dpred);
  if (!std::isfinite(loss)) {
    throw TrainingError("mm_training_step: non-finite loss");
  }
  dpred /= static_cast<double>(x_batch.rows());  // per-sample gradient scale
  const Gradients grads = backward(g, cache, dpred);
  apply_gradients(g, grads, opt);
  return loss;
}

double mean_mapped_cosine(const MlpNetwork& g, const TrainPairs& pairs) {
  if (pairs.count() == 0) return 0.0;
  const ForwardCache cache = forward(g, pairs.x, Mode::Eval);
  double total = 0.0;
  for (Eigen::Index i = 0; i < pairs.count(); ++i) {
    total += cosine(cache.output.row(i), pairs.y.row(i));
  }
  return total / static_cast<double>(pairs.count());
}

namespace {

// Deterministic shuffled cycling over row indices.
class BatchStream {
 public:
  BatchStream(Eigen::Index n, Rng& rng) : rng_(rng) {
    order_.resize(static_cast<std::size_t>(n));
    for (std::size_t i = 0; i < order_.size(); ++i) order_[i] = i;
    rng_.shuffle(order_);
  }

  std::vector<std::size_t> next(std::size_t batch_size) {
    std::vector<std::size_t> batch;
    batch.reserve(batch_size);
    while (batch.size() < batch_size) {
      if (cursor_ == order_.size()) {
        rng_.shuffle(order_);
        cursor_ = 0;
      }
      batch.push_back(order_[cursor_++]);
    }
    return batch;
  }

 private:
  Rng& rng_;
  std::vector<std::size_t> order_;
  std::size_t cursor_ = 0;
};

Eigen::MatrixXd gather(const Eigen::MatrixXd& m, const std::vector<std::size_t>& rows) {
  Eigen::MatrixXd out(static_cast<Eigen::Index>(rows.size()), m.cols());
  for (std::size_t i = 0; i < rows.size(); ++i) {
    out.row(static_cast<Eigen::Index>(i)) = m.row(static_cast<Eigen::Index>(rows[i]));
  }
  return out;
}

}  // namespace

// Shared by train_postspec and the adversarial trainer.
PairSplit split_validation(const TrainPairs& pairs, double fraction, Rng& rng) {
  std::vector<std::size_t> order(static_cast<std::size_t>(pairs.count()));
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
  rng.shuffle(order);

  const std::size_t n_val =
      static_cast<std::size_t>(fraction * static_cast<double>(order.size()));
  PairSplit split;
  std::vector<std::size_t> val_rows(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(n_val));
  std::vector<std::size_t> train_rows(order.begin() + static_cast<std::ptrdiff_t>(n_val), order.end());
  split.val.x = gather(pairs.x, val_rows);
  split.val.y = gather(pairs.y, val_rows);
  split.train.x = gather(pairs.x, train_rows);
  split.train.y = gather(pairs.y, train_rows);
  return split;
}

PostSpecResult train_postspec(const TrainPairs& pairs, const PostSpecConfig& cfg,
                              std::uint64_t seed) {
  cfg.validate();
  if (pairs.count() == 0) throw Error("train_postspec: no training pairs");
  if (static_cast<std::size_t>(pairs.count()) < cfg.batch_size) {
    throw Error("train_postspec: need at least batch_size (" +
                std::to_string(cfg.batch_size) + ") pairs, got " +
                std::to_string(pairs.count()));
  }

  Rng rng(seed);
  const PairSplit split = split_validation(pairs, cfg.validation_fraction, rng);
  const Eigen::Index d = pairs.x.cols();

  std::vector<double> dropout(cfg.hidden_count + 1, cfg.g_dropout);
  MlpNetwork g = make_mlp(d, cfg.hidden_count, cfg.hidden_size, d,
                          OutputKind::Linear, cfg.leaky_slope, dropout, rng);
  OptimizerState opt = make_optimizer(g, OptimizerKind::Sgd, cfg.lr);

  const std::size_t iters =
      cfg.iterations_per_epoch > 0
          ? cfg.iterations_per_epoch
          : std::max<std::size_t>(
                1, static_cast<std::size_t>(split.train.count()) / cfg.batch_size);

  BatchStream stream(split.train.count(), rng);
  PostSpecResult result;
  double best_val = -2.0;

  for (std::size_t epoch = 1; epoch <= cfg.epochs; ++epoch) {
    double loss_sum = 0.0;
    for (std::size_t it = 0; it < iters; ++it) {
      const auto rows = stream.next(cfg.batch_size);
      loss_sum += mm_training_step(g, opt, gather(split.train.x, rows),
                                   gather(split.train.y, rows), cfg, rng);
    }

    const double val = split.val.count() > 0
                           ? mean_mapped_cosine(g, split.val)
                           : mean_mapped_cosine(g, split.train);
    if (val > best_val) {
      best_val = val;
      opt.lr *= cfg.decay;
    } else {
      opt.lr *= cfg.plateau_decay;
    }
    result.log.push_back({epoch, loss_sum / static_cast<double>(iters), val, opt.lr});
  }

  result.final_val_cosine = result.log.back().val_cosine;
  result.net = std::move(g);
  return result;
}

EmbeddingSpace apply_map(const MlpNetwork& net, const EmbeddingSpace& space) {
  if (net.input_dim() != space.dim()) {
    throw Error("apply_map: network input dim " + std::to_string(net.input_dim()) +
                " does not match space dim " + std::to_string(space.dim()));
  }
  Eigen::MatrixXd out(space.matrix.rows(), net.output_dim());
  const Eigen::Index chunk = 4096;
  for (Eigen::Index lo = 0; lo < space.matrix.rows(); lo += chunk) {
    const Eigen::Index n = std::min(chunk, space.matrix.rows() - lo);
    const ForwardCache cache = forward(net, space.matrix.middleRows(lo, n), Mode::Eval);
    out.middleRows(lo, n) = cache.output;
  }
  return unit_normalize(EmbeddingSpace::create(space.words, std::move(out)));
}

}  // namespace vecspec
