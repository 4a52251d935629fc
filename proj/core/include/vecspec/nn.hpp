#pragma once

#include <Eigen/Core>
#include <functional>
#include <string>
#include <vector>

#include "vecspec/rng.hpp"

namespace vecspec {

inline double rectifier(double x) { return x > 0.0 ? x : 0.0; }

inline double leaky_relu(double x, double slope) {
  return x >= 0.0 ? x : slope * x;
}

enum class OutputKind { Linear, Softmax2 };

enum class Mode { Train, Eval };

// Feed-forward net: hidden layers with LeakyReLU, linear output layer.
// Softmax2 nets additionally squash the two output logits in forward().
// Batches are row-major: one sample per row.
struct MlpNetwork {
  struct Layer {
    Eigen::MatrixXd w;       // out x in; layer computes x * w^T + b
    Eigen::RowVectorXd b;
  };
  std::vector<Layer> layers;          // hidden layers + one output layer
  std::vector<double> dropout;        // drop rate on the input of each layer
  double leaky_slope = 0.2;
  OutputKind output_kind = OutputKind::Linear;

  Eigen::Index input_dim() const { return layers.front().w.cols(); }
  Eigen::Index output_dim() const { return layers.back().w.rows(); }
  std::size_t hidden_count() const { return layers.size() - 1; }

  std::size_t parameter_count() const;
  bool all_finite() const;
};

// Weights uniform in [-1/sqrt(fan_in), +1/sqrt(fan_in)], biases zero.
// dropout_rates must have hidden_count+1 entries (input + each hidden
// activation); the output is never dropped.
MlpNetwork make_mlp(Eigen::Index input_dim, std::size_t hidden_count,
                    Eigen::Index hidden_size, Eigen::Index output_dim,
                    OutputKind kind, double leaky_slope,
                    std::vector<double> dropout_rates, Rng& rng);

struct ForwardCache {
  Mode mode = Mode::Eval;
  std::vector<Eigen::MatrixXd> inputs;    // post-dropout input to each layer
  std::vector<Eigen::MatrixXd> preacts;   // hidden pre-activations
  std::vector<Eigen::MatrixXd> masks;     // inverted-dropout masks (train only)
  Eigen::MatrixXd logits;                 // final linear outputs
  Eigen::MatrixXd output;                 // logits, or softmax probabilities
};

// Train mode samples fresh dropout masks from rng (identical rng state gives
// identical masks); eval mode applies none and is a pure function.
ForwardCache forward(const MlpNetwork& net, const Eigen::MatrixXd& batch,
                     Mode mode, Rng* rng = nullptr);

struct Gradients {
  std::vector<Eigen::MatrixXd> dw;
  std::vector<Eigen::RowVectorXd> db;
  Eigen::MatrixXd dinput;  // gradient w.r.t. the raw batch input

  void accumulate(const Gradients& other);
};

// grad_logits is dL/d(final linear output); softmax (if any) is folded into
// the loss helpers, which hand the logit gradient here. Reuses the cache's
// dropout masks, so the result is exact for the sampled forward pass.
Gradients backward(const MlpNetwork& net, const ForwardCache& cache,
                   const Eigen::MatrixXd& grad_logits);

Gradients zero_gradients(const MlpNetwork& net, Eigen::Index batch_rows);

// ---- Optimizers ----------------------------------------------------------

enum class OptimizerKind { Sgd, Adagrad };

struct OptimizerState {
  OptimizerKind kind = OptimizerKind::Sgd;
  double lr = 0.1;
  double epsilon = 1e-8;
  // Adagrad sum-of-squared-gradient accumulators, one per parameter block.
  std::vector<Eigen::MatrixXd> acc_w;
  std::vector<Eigen::RowVectorXd> acc_b;
};

OptimizerState make_optimizer(const MlpNetwork& net, OptimizerKind kind,
                              double lr, double epsilon = 1e-8);

// p <- p - lr * g. Throws TrainingError on non-finite gradients.
void sgd_step(Eigen::Ref<Eigen::MatrixXd> params, const Eigen::MatrixXd& grads,
              double lr);
void sgd_step(Eigen::Ref<Eigen::RowVectorXd> params,
              const Eigen::RowVectorXd& grads, double lr);

// acc <- acc + g^2; p <- p - lr * g / (sqrt(acc) + eps).
void adagrad_step(Eigen::Ref<Eigen::MatrixXd> params,
                  const Eigen::MatrixXd& grads,
                  Eigen::Ref<Eigen::MatrixXd> acc, double lr, double eps);
void adagrad_step(Eigen::Ref<Eigen::RowVectorXd> params,
                  const Eigen::RowVectorXd& grads,
                  Eigen::Ref<Eigen::RowVectorXd> acc, double lr, double eps);

void apply_gradients(MlpNetwork& net, const Gradients& grads,
                     OptimizerState& state);

// ---- Verification --------------------------------------------------------

// Central finite differences over a random sample of parameters.
// loss() must be deterministic (eval mode or fixed dropout masks) and
// recompute the loss from the network's current parameters. Returns the
// max relative error against the supplied analytic gradients.
double grad_check(MlpNetwork& net, const std::function<double()>& loss,
                  const Gradients& analytic, int n_samples, double step,
                  Rng& rng);

// Same check for a free parameter matrix (embedding rows, alignment maps).
double grad_check_matrix(Eigen::MatrixXd& params,
                         const std::function<double()>& loss,
                         const Eigen::MatrixXd& analytic, int n_samples,
                         double step, Rng& rng);

// ---- Checkpoints ---------------------------------------------------------

// Versioned text checkpoint; load(save(net)) reproduces eval-mode outputs
// bitwise (values are written with round-trip-exact decimals).
void save_network(const MlpNetwork& net, const std::string& path);
MlpNetwork load_network(const std::string& path);

}  // namespace vecspec
