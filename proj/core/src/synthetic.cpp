#include "vecspec/synthetic.hpp"

#include <Eigen/QR>
#include <cmath>

#include "vecspec/errors.hpp"

namespace vecspec {

Eigen::MatrixXd sample_directions(std::size_t n, const SyntheticConfig& cfg,
                                  Rng& rng) {
  const Eigen::Index d = cfg.dim;
  Eigen::VectorXd scale(d);
  for (Eigen::Index i = 0; i < d; ++i) {
    scale(i) = std::exp(-cfg.spectrum_decay * static_cast<double>(i) / 2.0);
  }
  // Deterministic function of the config so two independently seeded draws
  // come from the same distribution.
  Eigen::RowVectorXd mean = scale.transpose();
  mean *= cfg.mean_offset / mean.norm();

  Eigen::MatrixXd m(static_cast<Eigen::Index>(n), d);
  for (Eigen::Index r = 0; r < m.rows(); ++r) {
    for (Eigen::Index c = 0; c < d; ++c) {
      m(r, c) = mean(c) + scale(c) * rng.normal();
    }
    m.row(r) /= m.row(r).norm();
  }
  return m;
}

Eigen::MatrixXd random_orthogonal(Eigen::Index d, Rng& rng) {
  Eigen::MatrixXd g(d, d);
  for (Eigen::Index r = 0; r < d; ++r) {
    for (Eigen::Index c = 0; c < d; ++c) g(r, c) = rng.normal();
  }
  Eigen::HouseholderQR<Eigen::MatrixXd> qr(g);
  Eigen::MatrixXd q = qr.householderQ();
  const Eigen::MatrixXd r = qr.matrixQR().triangularView<Eigen::Upper>();
  for (Eigen::Index i = 0; i < d; ++i) {
    if (r(i, i) < 0.0) q.col(i) = -q.col(i);
  }
  return q;
}

Eigen::MatrixXd GroundTruthMap::apply(const Eigen::MatrixXd& unit_rows) const {
  Eigen::MatrixXd z = gain * (unit_rows * rotation.transpose());
  Eigen::MatrixXd y = 0.5 * z + 0.5 * z.array().tanh().matrix();
  for (Eigen::Index i = 0; i < y.rows(); ++i) {
    y.row(i) /= y.row(i).norm();
  }
  return y;
}

namespace {

std::vector<std::string> numbered_words(std::size_t n, const std::string& prefix) {
  std::vector<std::string> words(n);
  for (std::size_t i = 0; i < n; ++i) {
    words[i] = prefix + std::to_string(i);
  }
  return words;
}

}  // namespace

TrainPairs SyntheticTask::seen_pairs() const {
  TrainPairs p;
  p.x = original.matrix.topRows(static_cast<Eigen::Index>(n_seen));
  p.y = truth.matrix.topRows(static_cast<Eigen::Index>(n_seen));
  return p;
}

TrainPairs SyntheticTask::heldout_pairs() const {
  const Eigen::Index n = original.matrix.rows() - static_cast<Eigen::Index>(n_seen);
  TrainPairs p;
  p.x = original.matrix.bottomRows(n);
  p.y = truth.matrix.bottomRows(n);
  return p;
}

SyntheticTask make_synthetic_task(std::size_t n_seen, std::size_t n_heldout,
                                  const SyntheticConfig& cfg, std::uint64_t seed,
                                  const std::string& word_prefix) {
  if (n_seen == 0) throw Error("make_synthetic_task: need at least one seen word");
  Rng rng(seed);

  SyntheticTask task;
  task.n_seen = n_seen;
  task.map.rotation = random_orthogonal(cfg.dim, rng);
  task.map.gain = cfg.gain;

  const std::size_t n = n_seen + n_heldout;
  const Eigen::MatrixXd dirs = sample_directions(n, cfg, rng);
  auto words = numbered_words(n, word_prefix);
  task.truth = EmbeddingSpace::create(words, task.map.apply(dirs));
  task.original = EmbeddingSpace::create(std::move(words), dirs);
  return task;
}

SyntheticBilingual make_synthetic_target(const GroundTruthMap& map,
                                         const Eigen::MatrixXd& base_directions,
                                         double noise, std::uint64_t seed,
                                         const std::string& word_prefix) {
  Rng rng(seed);
  SyntheticBilingual out;
  const Eigen::Index d = base_directions.cols();
  out.planted_rotation = random_orthogonal(d, rng);

  Eigen::MatrixXd base = base_directions;
  if (noise > 0.0) {
    for (Eigen::Index r = 0; r < base.rows(); ++r) {
      for (Eigen::Index c = 0; c < d; ++c) base(r, c) += noise * rng.normal();
      base.row(r) /= base.row(r).norm();
    }
  }

  auto words = numbered_words(static_cast<std::size_t>(base.rows()), word_prefix);
  out.truth = EmbeddingSpace::create(words, map.apply(base));
  out.target = EmbeddingSpace::create(std::move(words),
                                      base * out.planted_rotation.transpose());
  return out;
}

}  // namespace vecspec
