#pragma once

#include <Eigen/Core>
#include <cstdint>
#include <string>
#include <vector>

#include "vecspec/embedding.hpp"
#include "vecspec/postspec.hpp"
#include "vecspec/rng.hpp"

namespace vecspec {

// Parameters of the synthetic "distributional" vector generator. The
// direction distribution is anisotropic (decaying covariance spectrum) and
// mean-shifted, like real embedding spaces; that asymmetry is what makes an
// unsupervised alignment of two independent samples identifiable.
struct SyntheticConfig {
  Eigen::Index dim = 32;
  double gain = 3.0;            // scale fed to the tanh nonlinearity
  double mean_offset = 0.4;     // skew of the direction distribution
  double spectrum_decay = 0.12; // covariance eigenvalue e^(-decay*i)
};

// n unit row vectors from the anisotropic direction distribution.
Eigen::MatrixXd sample_directions(std::size_t n, const SyntheticConfig& cfg,
                                  Rng& rng);

// Haar-ish random orthogonal matrix via QR with sign correction.
Eigen::MatrixXd random_orthogonal(Eigen::Index d, Rng& rng);

// Ground-truth specialization: a random orthogonal rotation composed with an
// elementwise tanh blended at 0.5, applied at scale `gain`, re-normalized:
//   y = normalize(0.5 * z + 0.5 * tanh(z)),  z = gain * R x
struct GroundTruthMap {
  Eigen::MatrixXd rotation;  // column convention: z = gain * R x
  double gain = 3.0;

  Eigen::MatrixXd apply(const Eigen::MatrixXd& unit_rows) const;
};

struct SyntheticTask {
  EmbeddingSpace original;   // unit inputs for all words (seen first)
  EmbeddingSpace truth;      // ground-truth specialized vectors, row-aligned
  std::size_t n_seen = 0;    // rows [0, n_seen) are seen words
  GroundTruthMap map;

  TrainPairs seen_pairs() const;
  TrainPairs heldout_pairs() const;
};

SyntheticTask make_synthetic_task(std::size_t n_seen, std::size_t n_heldout,
                                  const SyntheticConfig& cfg, std::uint64_t seed,
                                  const std::string& word_prefix = "s");

// A target "language": a planted rotation of the given base directions under
// a disjoint vocabulary (fresh word strings, zero lexical overlap). Mirrors
// the cross-lingual isometry assumption: concepts shared, lexicalization
// different. noise > 0 perturbs the base before rotating (and renormalizes).
// truth = the ground-truth specialization of the (unrotated) base.
struct SyntheticBilingual {
  EmbeddingSpace target;
  EmbeddingSpace truth;                // row-aligned with target
  Eigen::MatrixXd planted_rotation;    // column convention: x_t = R x_base
};

SyntheticBilingual make_synthetic_target(const GroundTruthMap& map,
                                         const Eigen::MatrixXd& base_directions,
                                         double noise, std::uint64_t seed,
                                         const std::string& word_prefix = "t");

}  // namespace vecspec
