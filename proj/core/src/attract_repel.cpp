#include "vecspec/attract_repel.hpp"

#include <algorithm>
#include <cmath>
#include <set>

#include "vecspec/errors.hpp"
#include "vecspec/nn.hpp"
#include "vecspec/rng.hpp"

namespace vecspec {

void ArConfig::validate() const {
  if (delta_attract < 0.0) throw ConfigError("delta_attract", "margin must be >= 0");
  if (delta_repel < 0.0) throw ConfigError("delta_repel", "margin must be >= 0");
  if (lambda_reg < 0.0) throw ConfigError("lambda_reg", "must be >= 0");
  if (batch_attract < 1) throw ConfigError("batch_attract", "must be >= 1");
  if (batch_repel < 1) throw ConfigError("batch_repel", "must be >= 1");
  if (epochs < 1) throw ConfigError("epochs", "must be >= 1");
  if (lr <= 0.0) throw ConfigError("lr", "must be > 0");
}

namespace {

std::vector<std::size_t> batch_pool(const std::vector<IndexPair>& a,
                                    const std::vector<IndexPair>& b) {
  std::set<std::size_t> uniq;
  for (const auto& p : a) {
    uniq.insert(p.left);
    uniq.insert(p.right);
  }
  for (const auto& p : b) {
    uniq.insert(p.left);
    uniq.insert(p.right);
  }
  return {uniq.begin(), uniq.end()};  // ascending: deterministic tie-breaks
}

// argmax (nearest=true) or argmin (nearest=false) of dot(x_row, pool rows),
// skipping the pair's own members. Pool indices are sorted ascending, so the
// first strict improvement wins ties toward the lowest row index.
std::size_t pick_negative(const Eigen::MatrixXd& m, std::size_t x_row,
                          const IndexPair& own,
                          const std::vector<std::size_t>& pool, bool nearest) {
  double best = nearest ? -2.0 : 2.0;
  std::size_t best_idx = std::size_t(-1);
  for (std::size_t c : pool) {
    if (c == own.left || c == own.right) continue;
    const double d = m.row(static_cast<Eigen::Index>(x_row))
                         .dot(m.row(static_cast<Eigen::Index>(c)));
    if (nearest ? d > best : d < best) {
      best = d;
      best_idx = c;
    }
  }
  return best_idx;
}

}  // namespace

NegativeAssignment mine_negatives(const Eigen::MatrixXd& vectors,
                                  const std::vector<IndexPair>& batch_attract,
                                  const std::vector<IndexPair>& batch_repel) {
  const auto pool = batch_pool(batch_attract, batch_repel);
  if (pool.size() < 3) {
    throw Error("mine_negatives: candidate pool of " + std::to_string(pool.size()) +
                " vectors has no valid negative for every pair");
  }

  NegativeAssignment out;
  out.attract_left.reserve(batch_attract.size());
  out.attract_right.reserve(batch_attract.size());
  for (const auto& p : batch_attract) {
    out.attract_left.push_back(pick_negative(vectors, p.left, p, pool, true));
    out.attract_right.push_back(pick_negative(vectors, p.right, p, pool, true));
  }
  out.repel_left.reserve(batch_repel.size());
  out.repel_right.reserve(batch_repel.size());
  for (const auto& p : batch_repel) {
    out.repel_left.push_back(pick_negative(vectors, p.left, p, pool, false));
    out.repel_right.push_back(pick_negative(vectors, p.right, p, pool, false));
  }
  return out;
}

double att_loss(const Eigen::MatrixXd& xl, const Eigen::MatrixXd& xr,
                const Eigen::MatrixXd& tl, const Eigen::MatrixXd& tr,
                double delta) {
  double loss = 0.0;
  for (Eigen::Index i = 0; i < xl.rows(); ++i) {
    const double sim = xl.row(i).dot(xr.row(i));
    loss += rectifier(delta + xl.row(i).dot(tl.row(i)) - sim);
    loss += rectifier(delta + xr.row(i).dot(tr.row(i)) - sim);
  }
  return loss;
}

double rep_loss(const Eigen::MatrixXd& xl, const Eigen::MatrixXd& xr,
                const Eigen::MatrixXd& tl, const Eigen::MatrixXd& tr,
                double delta) {
  double loss = 0.0;
  for (Eigen::Index i = 0; i < xl.rows(); ++i) {
    const double sim = xl.row(i).dot(xr.row(i));
    loss += rectifier(delta - xl.row(i).dot(tl.row(i)) + sim);
    loss += rectifier(delta - xr.row(i).dot(tr.row(i)) + sim);
  }
  return loss;
}

double pre_loss(const Eigen::MatrixXd& current, const Eigen::MatrixXd& originals,
                double lambda) {
  if (current.rows() != originals.rows() || current.cols() != originals.cols()) {
    throw Error("pre_loss: shape mismatch");
  }
  double loss = 0.0;
  for (Eigen::Index i = 0; i < current.rows(); ++i) {
    loss += lambda * (current.row(i) - originals.row(i)).norm();
  }
  return loss;
}

namespace {

using GradMap = std::unordered_map<std::size_t, Eigen::RowVectorXd>;

void add_grad(GradMap& g, std::size_t row, const Eigen::RowVectorXd& v) {
  auto it = g.find(row);
  if (it == g.end()) {
    g.emplace(row, v);
  } else {
    it->second += v;
  }
}

}  // namespace

ArStepLosses ar_step_loss_and_grads(
    const Eigen::MatrixXd& current, const Eigen::MatrixXd& originals,
    const std::vector<IndexPair>& batch_attract,
    const std::vector<IndexPair>& batch_repel, const NegativeAssignment& negs,
    const ArConfig& cfg, GradMap* grads) {
  ArStepLosses losses;

  auto row = [&current](std::size_t i) {
    return current.row(static_cast<Eigen::Index>(i));
  };

  // Att: tau(dA + xl.tl - xl.xr) + tau(dA + xr.tr - xl.xr)
  for (std::size_t i = 0; i < batch_attract.size(); ++i) {
    const auto& p = batch_attract[i];
    const std::size_t tli = negs.attract_left[i];
    const std::size_t tri = negs.attract_right[i];
    const double sim = row(p.left).dot(row(p.right));

    const double zl = cfg.delta_attract + row(p.left).dot(row(tli)) - sim;
    if (zl > 0.0) {
      losses.att += zl;
      if (grads) {
        add_grad(*grads, p.left, row(tli) - row(p.right));
        add_grad(*grads, tli, row(p.left));
        add_grad(*grads, p.right, -row(p.left));
      }
    }
    const double zr = cfg.delta_attract + row(p.right).dot(row(tri)) - sim;
    if (zr > 0.0) {
      losses.att += zr;
      if (grads) {
        add_grad(*grads, p.right, row(tri) - row(p.left));
        add_grad(*grads, tri, row(p.right));
        add_grad(*grads, p.left, -row(p.right));
      }
    }
  }

  // Rep: tau(dR - xl.tl + xl.xr) + tau(dR - xr.tr + xl.xr)
  for (std::size_t i = 0; i < batch_repel.size(); ++i) {
    const auto& p = batch_repel[i];
    const std::size_t tli = negs.repel_left[i];
    const std::size_t tri = negs.repel_right[i];
    const double sim = row(p.left).dot(row(p.right));

    const double zl = cfg.delta_repel - row(p.left).dot(row(tli)) + sim;
    if (zl > 0.0) {
      losses.rep += zl;
      if (grads) {
        add_grad(*grads, p.left, row(p.right) - row(tli));
        add_grad(*grads, tli, -row(p.left));
        add_grad(*grads, p.right, row(p.left));
      }
    }
    const double zr = cfg.delta_repel - row(p.right).dot(row(tri)) + sim;
    if (zr > 0.0) {
      losses.rep += zr;
      if (grads) {
        add_grad(*grads, p.right, row(p.left) - row(tri));
        add_grad(*grads, tri, -row(p.right));
        add_grad(*grads, p.left, row(p.right));
      }
    }
  }

  // Pre: every distinct batch member is pulled toward its original vector.
  for (std::size_t r : batch_pool(batch_attract, batch_repel)) {
    const Eigen::RowVectorXd diff =
        current.row(static_cast<Eigen::Index>(r)) -
        originals.row(static_cast<Eigen::Index>(r));
    const double n = diff.norm();
    losses.pre += cfg.lambda_reg * n;
    if (grads && n > 0.0) {
      add_grad(*grads, r, (cfg.lambda_reg / n) * diff);
    }
  }

  return losses;
}

ArResult specialize(const EmbeddingSpace& space, const ConstraintSet& cs,
                    const ArConfig& cfg, std::uint64_t seed) {
  cfg.validate();
  if (cs.empty()) {
    throw Error("specialize: constraint set is empty");
  }

  auto to_index_pairs = [&space](const std::vector<WordPair>& pairs) {
    std::vector<IndexPair> out;
    out.reserve(pairs.size());
    for (const auto& [a, b] : pairs) {
      if (!space.contains(a) || !space.contains(b)) {
        throw Error("specialize: constraint word not in vocabulary: " +
                    (space.contains(a) ? b : a));
      }
      out.push_back({space.row_of(a), space.row_of(b)});
    }
    return out;
  };
  std::vector<IndexPair> attract = to_index_pairs(cs.attract);
  std::vector<IndexPair> repel = to_index_pairs(cs.repel);

  Eigen::MatrixXd current = space.matrix;
  const Eigen::MatrixXd originals = space.matrix;
  Eigen::MatrixXd acc = Eigen::MatrixXd::Zero(current.rows(), current.cols());

  std::set<std::size_t> touched;
  for (const auto& p : attract) {
    touched.insert(p.left);
    touched.insert(p.right);
  }
  for (const auto& p : repel) {
    touched.insert(p.left);
    touched.insert(p.right);
  }

  Rng rng(seed);
  ArResult result;
  result.epochs.reserve(cfg.epochs);

  const std::size_t a_batches =
      (attract.size() + cfg.batch_attract - 1) / cfg.batch_attract;
  const std::size_t r_batches =
      (repel.size() + cfg.batch_repel - 1) / cfg.batch_repel;
  const std::size_t steps = std::max(a_batches, r_batches);

  for (std::size_t epoch = 1; epoch <= cfg.epochs; ++epoch) {
    rng.shuffle(attract);
    rng.shuffle(repel);

    ArEpochStats stats;
    stats.epoch = epoch;

    for (std::size_t s = 0; s < steps; ++s) {
      std::vector<IndexPair> ba, br;
      if (s < a_batches) {
        const std::size_t lo = s * cfg.batch_attract;
        const std::size_t hi = std::min(attract.size(), lo + cfg.batch_attract);
        ba.assign(attract.begin() + static_cast<std::ptrdiff_t>(lo),
                  attract.begin() + static_cast<std::ptrdiff_t>(hi));
      }
      if (s < r_batches) {
        const std::size_t lo = s * cfg.batch_repel;
        const std::size_t hi = std::min(repel.size(), lo + cfg.batch_repel);
        br.assign(repel.begin() + static_cast<std::ptrdiff_t>(lo),
                  repel.begin() + static_cast<std::ptrdiff_t>(hi));
      }

      const NegativeAssignment negs = mine_negatives(current, ba, br);
      std::unordered_map<std::size_t, Eigen::RowVectorXd> grads;
      const ArStepLosses l =
          ar_step_loss_and_grads(current, originals, ba, br, negs, cfg, &grads);
      stats.att += l.att;
      stats.rep += l.rep;
      stats.pre += l.pre;

      for (auto& [r, g] : grads) {
        Eigen::RowVectorXd prow = current.row(static_cast<Eigen::Index>(r));
        Eigen::RowVectorXd arow = acc.row(static_cast<Eigen::Index>(r));
        adagrad_step(prow, g, arow, cfg.lr, cfg.epsilon);
        current.row(static_cast<Eigen::Index>(r)) = prow;
        acc.row(static_cast<Eigen::Index>(r)) = arow;
      }
    }

    // Keep dot products similarity-scaled; only touched rows move.
    for (std::size_t r : touched) {
      const double n = current.row(static_cast<Eigen::Index>(r)).norm();
      if (n == 0.0) {
        throw TrainingError("specialize: vector for '" + space.words[r] +
                            "' collapsed to zero");
      }
      current.row(static_cast<Eigen::Index>(r)) /= n;
    }

    stats.total = stats.att + stats.rep + stats.pre;
    result.epochs.push_back(stats);
  }

  result.space = EmbeddingSpace::create(space.words, std::move(current));
  return result;
}

}  // namespace vecspec
