#include "vecspec/xling.hpp"

#include <Eigen/SVD>
#include <algorithm>
#include <cmath>
#include <fstream>
#include <iostream>
#include <numeric>

#include "vecspec/auxgan.hpp"
#include "vecspec/errors.hpp"
#include "vecspec/rng.hpp"
#include "vecspec/textnum.hpp"

namespace vecspec {

double AlignmentMap::orthogonality_error() const {
  const Eigen::Index d = w.rows();
  return (w * w.transpose() - Eigen::MatrixXd::Identity(d, d)).norm();
}

void save_alignment(const AlignmentMap& map, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw IoError(path, "cannot open for writing");
  out << map.w.rows() << ' ' << map.w.cols() << '\n';
  for (Eigen::Index r = 0; r < map.w.rows(); ++r) {
    for (Eigen::Index c = 0; c < map.w.cols(); ++c) {
      if (c) out << ' ';
      out << format_double(map.w(r, c));
    }
    out << '\n';
  }
  if (!out) throw IoError(path, "write failed");
}

AlignmentMap load_alignment(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError(path, "cannot open for reading");
  Eigen::Index rows = 0, cols = 0;
  if (!(in >> rows >> cols) || rows <= 0 || cols <= 0 || rows != cols) {
    throw ParseError(path, 1, "expected square matrix header 'd d'");
  }
  AlignmentMap map;
  map.w.resize(rows, cols);
  for (Eigen::Index r = 0; r < rows; ++r) {
    for (Eigen::Index c = 0; c < cols; ++c) {
      std::string tok;
      if (!(in >> tok) || !parse_double(tok, map.w(r, c))) {
        throw ParseError(path, static_cast<std::size_t>(r) + 2, "malformed matrix value");
      }
    }
  }
  return map;
}

void AlignConfig::validate() const {
  if (hidden_count < 1) throw ConfigError("hidden_count", "must be >= 1");
  if (hidden_size < 1) throw ConfigError("hidden_size", "must be >= 1");
  if (label_smoothing < 0.0 || label_smoothing >= 0.5) {
    throw ConfigError("label_smoothing", "must be in [0, 0.5)");
  }
  if (d_steps < 1) throw ConfigError("d_steps", "must be >= 1");
  if (batch_size < 1) throw ConfigError("batch_size", "must be >= 1");
  if (epochs < 1) throw ConfigError("epochs", "must be >= 1");
  if (lr <= 0.0) throw ConfigError("lr", "must be > 0");
  if (d_lr <= 0.0) throw ConfigError("d_lr", "must be > 0");
  if (ortho_beta < 0.0 || ortho_beta >= 1.0) throw ConfigError("ortho_beta", "must be in [0,1)");
  if (csls_k < 1) throw ConfigError("csls_k", "must be >= 1");
  if (dict_top_n < 1) throw ConfigError("dict_top_n", "must be >= 1");
  if (n_refine < 1) throw ConfigError("n_refine", "must be >= 1");
}

Eigen::VectorXd mean_topk_cosine(const Eigen::MatrixXd& queries,
                                 const Eigen::MatrixXd& candidates,
                                 std::size_t k) {
  if (k == 0 || static_cast<Eigen::Index>(k) > candidates.rows()) {
    throw Error("mean_topk_cosine: k=" + std::to_string(k) + " with " +
                std::to_string(candidates.rows()) + " candidates");
  }
  Eigen::VectorXd r(queries.rows());
  const Eigen::Index block = 512;
  std::vector<double> row(static_cast<std::size_t>(candidates.rows()));
  for (Eigen::Index lo = 0; lo < queries.rows(); lo += block) {
    const Eigen::Index n = std::min(block, queries.rows() - lo);
    const Eigen::MatrixXd sims = queries.middleRows(lo, n) * candidates.transpose();
    for (Eigen::Index i = 0; i < n; ++i) {
      for (Eigen::Index j = 0; j < sims.cols(); ++j) {
        row[static_cast<std::size_t>(j)] = sims(i, j);
      }
      std::nth_element(row.begin(), row.begin() + static_cast<std::ptrdiff_t>(k) - 1,
                       row.end(), std::greater<double>());
      r(lo + i) = std::accumulate(row.begin(), row.begin() + static_cast<std::ptrdiff_t>(k), 0.0) /
                  static_cast<double>(k);
    }
  }
  return r;
}

Eigen::VectorXd csls_scores(const Eigen::RowVectorXd& query,
                            const Eigen::MatrixXd& candidates, std::size_t k,
                            double r_query, const Eigen::VectorXd& r_candidates) {
  if (static_cast<Eigen::Index>(k) > candidates.rows()) {
    throw Error("csls_scores: neighborhood size k=" + std::to_string(k) +
                " exceeds candidate count " + std::to_string(candidates.rows()));
  }
  if (r_candidates.size() != candidates.rows()) {
    throw Error("csls_scores: r_candidates size mismatch");
  }
  return 2.0 * (candidates * query.transpose()).array() - r_query -
         r_candidates.array();
}

namespace {

Eigen::MatrixXd normalized_rows(Eigen::MatrixXd m) {
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    const double n = m.row(i).norm();
    if (n > 0.0) m.row(i) /= n;
  }
  return m;
}

// argmax_j of 2*cos(q_i, c_j) - penalty_j for each query row, blocked.
std::vector<std::size_t> csls_argmax(const Eigen::MatrixXd& queries,
                                     const Eigen::MatrixXd& candidates,
                                     const Eigen::VectorXd& penalty) {
  std::vector<std::size_t> arg(static_cast<std::size_t>(queries.rows()));
  const Eigen::Index block = 512;
  for (Eigen::Index lo = 0; lo < queries.rows(); lo += block) {
    const Eigen::Index n = std::min(block, queries.rows() - lo);
    Eigen::MatrixXd scores = 2.0 * (queries.middleRows(lo, n) * candidates.transpose());
    scores.rowwise() -= penalty.transpose();
    for (Eigen::Index i = 0; i < n; ++i) {
      Eigen::Index best = 0;
      scores.row(i).maxCoeff(&best);
      arg[static_cast<std::size_t>(lo + i)] = static_cast<std::size_t>(best);
    }
  }
  return arg;
}

}  // namespace

SyntheticDictionary build_dictionary(const EmbeddingSpace& source,
                                     const EmbeddingSpace& target,
                                     const AlignmentMap& map, std::size_t k,
                                     std::size_t top_n) {
  const Eigen::Index ns = std::min<Eigen::Index>(
      static_cast<Eigen::Index>(top_n), source.matrix.rows());
  const Eigen::Index nt = std::min<Eigen::Index>(
      static_cast<Eigen::Index>(top_n), target.matrix.rows());
  const Eigen::MatrixXd src = source.matrix.topRows(ns);
  const Eigen::MatrixXd mapped =
      normalized_rows(target.matrix.topRows(nt) * map.w.transpose());

  const Eigen::VectorXd r_src_of_target = mean_topk_cosine(mapped, src, k);
  const Eigen::VectorXd r_tgt_of_source = mean_topk_cosine(src, mapped, k);

  const auto s2t = csls_argmax(src, mapped, r_src_of_target);
  const auto t2s = csls_argmax(mapped, src, r_tgt_of_source);

  SyntheticDictionary dict;
  for (std::size_t i = 0; i < s2t.size(); ++i) {
    const std::size_t j = s2t[i];
    if (t2s[j] != i) continue;  // keep mutual argmax pairs only
    const double cos = src.row(static_cast<Eigen::Index>(i))
                           .dot(mapped.row(static_cast<Eigen::Index>(j)));
    const double score = 2.0 * cos - r_tgt_of_source(static_cast<Eigen::Index>(i)) -
                         r_src_of_target(static_cast<Eigen::Index>(j));
    dict.entries.push_back({i, j, score});
  }
  if (dict.entries.empty()) {
    throw Error("build_dictionary: no mutual CSLS pairs (alignment failed)");
  }
  return dict;
}

AlignmentMap procrustes(const Eigen::MatrixXd& target_rows,
                        const Eigen::MatrixXd& source_rows) {
  if (target_rows.rows() != source_rows.rows() ||
      target_rows.cols() != source_rows.cols()) {
    throw Error("procrustes: paired matrices must have identical shape");
  }
  const Eigen::Index d = target_rows.cols();
  if (target_rows.rows() < d) {
    throw Error("procrustes: need at least " + std::to_string(d) + " pairs, got " +
                std::to_string(target_rows.rows()));
  }

  const Eigen::MatrixXd m = source_rows.transpose() * target_rows;
  Eigen::JacobiSVD<Eigen::MatrixXd> svd(m, Eigen::ComputeFullU | Eigen::ComputeFullV);

  const auto& sv = svd.singularValues();
  if (sv(sv.size() - 1) < 1e-12 * std::max(1.0, sv(0))) {
    std::cerr << "procrustes: warning: rank-deficient cross-covariance, "
                 "solution is not unique\n";
  }

  AlignmentMap map;
  map.w = svd.matrixU() * svd.matrixV().transpose();
  return map;
}

namespace {

class RowStream {
 public:
  RowStream(Eigen::Index n, Rng& rng) : rng_(rng), order_(static_cast<std::size_t>(n)) {
    for (std::size_t i = 0; i < order_.size(); ++i) order_[i] = i;
    rng_.shuffle(order_);
  }
  Eigen::MatrixXd next(const Eigen::MatrixXd& m, std::size_t k) {
    Eigen::MatrixXd out(static_cast<Eigen::Index>(k), m.cols());
    for (std::size_t i = 0; i < k; ++i) {
      if (cursor_ == order_.size()) {
        rng_.shuffle(order_);
        cursor_ = 0;
      }
      out.row(static_cast<Eigen::Index>(i)) =
          m.row(static_cast<Eigen::Index>(order_[cursor_++]));
    }
    return out;
  }

 private:
  Rng& rng_;
  std::vector<std::size_t> order_;
  std::size_t cursor_ = 0;
};

// Mean cosine between up to val_dict_size source rows and their CSLS-argmax
// mapped target rows; the unsupervised early-stopping signal.
double csls_metric(const Eigen::MatrixXd& src, const Eigen::MatrixXd& tgt,
                   const Eigen::MatrixXd& w, const AlignConfig& cfg) {
  const Eigen::Index ns = std::min<Eigen::Index>(
      static_cast<Eigen::Index>(cfg.val_dict_size), src.rows());
  const Eigen::Index nt = std::min<Eigen::Index>(
      static_cast<Eigen::Index>(cfg.val_dict_size), tgt.rows());
  const Eigen::MatrixXd queries = src.topRows(ns);
  const Eigen::MatrixXd mapped = normalized_rows(tgt.topRows(nt) * w.transpose());
  const std::size_t k = std::min<std::size_t>(cfg.csls_k, static_cast<std::size_t>(ns));

  const Eigen::VectorXd penalty = mean_topk_cosine(mapped, queries, k);
  const auto arg = csls_argmax(queries, mapped, penalty);
  double total = 0.0;
  for (std::size_t i = 0; i < arg.size(); ++i) {
    total += queries.row(static_cast<Eigen::Index>(i))
                 .dot(mapped.row(static_cast<Eigen::Index>(arg[i])));
  }
  return total / static_cast<double>(arg.size());
}

}  // namespace

AlignResult adv_align(const EmbeddingSpace& source, const EmbeddingSpace& target,
                      const AlignConfig& cfg, std::uint64_t seed) {
  cfg.validate();
  if (source.dim() != target.dim()) {
    throw Error("adv_align: spaces have different dimensions");
  }
  const Eigen::Index d = source.dim();

  Rng rng(seed);
  Eigen::MatrixXd w = Eigen::MatrixXd::Identity(d, d);

  std::vector<double> d_rates(cfg.hidden_count + 1, 0.0);  // no dropout here
  MlpNetwork disc = make_mlp(d, cfg.hidden_count, cfg.hidden_size, 2,
                             OutputKind::Softmax2, cfg.leaky_slope, d_rates, rng);
  OptimizerState d_opt = make_optimizer(disc, OptimizerKind::Sgd, cfg.d_lr);
  double w_lr = cfg.lr;

  RowStream src_stream(source.matrix.rows(), rng);
  RowStream tgt_stream(target.matrix.rows(), rng);

  const std::size_t iters =
      cfg.iterations_per_epoch > 0
          ? cfg.iterations_per_epoch
          : std::max<std::size_t>(1, static_cast<std::size_t>(std::max(
                                         source.matrix.rows(), target.matrix.rows())) /
                                         cfg.batch_size);
  const std::size_t check_every = std::max<std::size_t>(1, iters / 5);

  AlignResult result;
  result.map.w = w;
  double epoch_best = -2.0;
  std::size_t checks_since_improvement = 0;
  bool stopped_early = false;

  // Baseline: the exact identity initialization is the map to beat.
  {
    AlignCheck baseline;
    baseline.metric = csls_metric(source.matrix, target.matrix, w, cfg);
    baseline.ortho_error = 0.0;
    result.log.push_back(baseline);
    result.best_metric = baseline.metric;
  }

  double d_sum = 0.0, adv_sum = 0.0;
  std::size_t d_count = 0, adv_count = 0;

  for (std::size_t epoch = 1; epoch <= cfg.epochs && !stopped_early; ++epoch) {
    for (std::size_t it = 0; it < iters && !stopped_early; ++it) {
      for (std::size_t s = 0; s < cfg.d_steps; ++s) {
        const Eigen::MatrixXd mapped =
            tgt_stream.next(target.matrix, cfg.batch_size) * w.transpose();
        const Eigen::MatrixXd src_batch = src_stream.next(source.matrix, cfg.batch_size);

        // One update from both pure batches.
        ForwardCache c1 = forward(disc, mapped, Mode::Train, &rng);
        Eigen::MatrixXd dl1;
        d_sum += softmax2_cross_entropy(c1.output, 0, cfg.label_smoothing, &dl1);
        dl1 /= static_cast<double>(cfg.batch_size);

        ForwardCache c2 = forward(disc, src_batch, Mode::Train, &rng);
        Eigen::MatrixXd dl2;
        d_sum += softmax2_cross_entropy(c2.output, 1, cfg.label_smoothing, &dl2);
        dl2 /= static_cast<double>(cfg.batch_size);

        Gradients dgrads = backward(disc, c1, dl1);
        dgrads.accumulate(backward(disc, c2, dl2));
        apply_gradients(disc, dgrads, d_opt);
        d_count += 2 * cfg.batch_size;
      }

      // Map update: swapped labels, gradient through the frozen discriminator.
      const Eigen::MatrixXd tgt_batch = tgt_stream.next(target.matrix, cfg.batch_size);
      const Eigen::MatrixXd mapped = tgt_batch * w.transpose();
      ForwardCache dc = forward(disc, mapped, Mode::Train, &rng);
      Eigen::MatrixXd dlogits;
      adv_sum += softmax2_cross_entropy(dc.output, 1, cfg.label_smoothing, &dlogits);
      adv_count += cfg.batch_size;
      dlogits /= static_cast<double>(cfg.batch_size);
      const Gradients dg = backward(disc, dc, dlogits);
      const Eigen::MatrixXd dw = dg.dinput.transpose() * tgt_batch;
      sgd_step(w, dw, w_lr);

      // Keep W on (near) the orthogonal manifold.
      w = (1.0 + cfg.ortho_beta) * w - cfg.ortho_beta * (w * w.transpose()) * w;
      if (!w.allFinite()) throw TrainingError("adv_align: map diverged to non-finite values");

      if ((it + 1) % check_every == 0 || it + 1 == iters) {
        AlignCheck check;
        check.epoch = epoch;
        check.progress = static_cast<double>(it + 1) / static_cast<double>(iters);
        check.d_loss_mean = d_count ? d_sum / static_cast<double>(d_count) : 0.0;
        check.adv_loss_mean = adv_count ? adv_sum / static_cast<double>(adv_count) : 0.0;
        check.metric = csls_metric(source.matrix, target.matrix, w, cfg);
        AlignmentMap probe{w};
        check.ortho_error = probe.orthogonality_error();
        result.log.push_back(check);
        d_sum = adv_sum = 0.0;
        d_count = adv_count = 0;

        if (check.metric > result.best_metric) {
          result.best_metric = check.metric;
          result.map.w = w;
          result.metric_improved = true;
          checks_since_improvement = 0;
        } else if (++checks_since_improvement >= cfg.patience) {
          stopped_early = true;
        }
      }
    }

    if (!result.log.empty()) {
      const double m = result.log.back().metric;
      const double factor = m > epoch_best ? cfg.decay : cfg.plateau_decay;
      epoch_best = std::max(epoch_best, m);
      w_lr *= factor;
      d_opt.lr *= factor;
    }
  }

  if (!result.metric_improved) {
    std::cerr << "adv_align: warning: unsupervised metric never improved; "
                 "returning best-so-far map\n";
  }
  return result;
}

AlignResult adv_align_restarts(const EmbeddingSpace& source,
                               const EmbeddingSpace& target,
                               const AlignConfig& cfg, std::uint64_t seed,
                               std::size_t n_restarts, double good_enough) {
  if (n_restarts == 0) throw ConfigError("n_restarts", "must be >= 1");
  AlignResult best;
  for (std::size_t r = 0; r < n_restarts; ++r) {
    AlignResult run = adv_align(source, target, cfg, seed * 1000 + r);
    if (r == 0 || run.best_metric > best.best_metric) {
      best = std::move(run);
    }
    if (best.best_metric >= good_enough) break;
  }
  return best;
}

RefineResult refine_alignment(const EmbeddingSpace& source,
                              const EmbeddingSpace& target,
                              const AlignmentMap& initial,
                              const AlignConfig& cfg) {
  RefineResult out;
  out.map = initial;
  for (std::size_t pass = 0; pass < cfg.n_refine; ++pass) {
    const SyntheticDictionary dict =
        build_dictionary(source, target, out.map, cfg.csls_k, cfg.dict_top_n);

    Eigen::MatrixXd xs(static_cast<Eigen::Index>(dict.entries.size()), source.dim());
    Eigen::MatrixXd xt(static_cast<Eigen::Index>(dict.entries.size()), target.dim());
    for (std::size_t i = 0; i < dict.entries.size(); ++i) {
      xs.row(static_cast<Eigen::Index>(i)) =
          source.matrix.row(static_cast<Eigen::Index>(dict.entries[i].source));
      xt.row(static_cast<Eigen::Index>(i)) =
          target.matrix.row(static_cast<Eigen::Index>(dict.entries[i].target));
    }
    out.map = procrustes(xt, xs);

    const Eigen::MatrixXd mapped = normalized_rows(xt * out.map.w.transpose());
    double cos_sum = 0.0;
    for (Eigen::Index i = 0; i < xs.rows(); ++i) {
      cos_sum += xs.row(i).dot(mapped.row(i));
    }
    out.dict_mean_cosine.push_back(cos_sum / static_cast<double>(xs.rows()));
  }
  return out;
}

EmbeddingSpace zero_shot_specialize(const AlignmentMap& map,
                                    const EmbeddingSpace& target,
                                    const MlpNetwork& generator) {
  if (map.w.cols() != target.dim()) {
    throw Error("zero_shot_specialize: map dimension does not match target space");
  }
  if (generator.input_dim() != map.w.rows()) {
    throw Error("zero_shot_specialize: generator input does not match map output");
  }
  EmbeddingSpace mapped =
      EmbeddingSpace::create(target.words, target.matrix * map.w.transpose());
  return apply_map(generator, mapped);
}

}  // namespace vecspec
