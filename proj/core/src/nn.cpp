#include "vecspec/nn.hpp"

#include <cmath>
#include <fstream>
#include <sstream>

#include "vecspec/errors.hpp"
#include "vecspec/textnum.hpp"

namespace vecspec {

std::size_t MlpNetwork::parameter_count() const {
  std::size_t n = 0;
  for (const auto& l : layers) {
    n += static_cast<std::size_t>(l.w.size()) + static_cast<std::size_t>(l.b.size());
  }
  return n;
}

bool MlpNetwork::all_finite() const {
  for (const auto& l : layers) {
    if (!l.w.allFinite() || !l.b.allFinite()) return false;
  }
  return true;
}

MlpNetwork make_mlp(Eigen::Index input_dim, std::size_t hidden_count,
                    Eigen::Index hidden_size, Eigen::Index output_dim,
                    OutputKind kind, double leaky_slope,
                    std::vector<double> dropout_rates, Rng& rng) {
  if (input_dim <= 0 || output_dim <= 0 || (hidden_count > 0 && hidden_size <= 0)) {
    throw ConfigError("network dims", "all layer sizes must be positive");
  }
  if (dropout_rates.size() != hidden_count + 1) {
    throw ConfigError("dropout_rates",
                      "expected " + std::to_string(hidden_count + 1) + " rates, got " +
                          std::to_string(dropout_rates.size()));
  }
  for (double r : dropout_rates) {
    if (r < 0.0 || r > 1.0) throw ConfigError("dropout_rates", "rate outside [0,1]");
  }

  MlpNetwork net;
  net.leaky_slope = leaky_slope;
  net.output_kind = kind;
  net.dropout = std::move(dropout_rates);

  Eigen::Index in = input_dim;
  for (std::size_t i = 0; i <= hidden_count; ++i) {
    const Eigen::Index out = (i == hidden_count) ? output_dim : hidden_size;
    MlpNetwork::Layer layer;
    const double bound = 1.0 / std::sqrt(static_cast<double>(in));
    layer.w.resize(out, in);
    for (Eigen::Index r = 0; r < out; ++r) {
      for (Eigen::Index c = 0; c < in; ++c) {
        layer.w(r, c) = rng.uniform(-bound, bound);
      }
    }
    layer.b = Eigen::RowVectorXd::Zero(out);
    net.layers.push_back(std::move(layer));
    in = out;
  }
  return net;
}

namespace {

Eigen::MatrixXd sample_mask(Eigen::Index rows, Eigen::Index cols, double rate,
                            Rng& rng) {
  Eigen::MatrixXd m(rows, cols);
  const double keep = 1.0 - rate;
  if (keep <= 0.0) {
    m.setZero();
    return m;
  }
  const double scale = 1.0 / keep;  // inverted dropout: eval needs no rescale
  for (Eigen::Index r = 0; r < rows; ++r) {
    for (Eigen::Index c = 0; c < cols; ++c) {
      m(r, c) = rng.bernoulli(keep) ? scale : 0.0;
    }
  }
  return m;
}

Eigen::MatrixXd softmax_rows(const Eigen::MatrixXd& logits) {
  Eigen::MatrixXd p(logits.rows(), logits.cols());
  for (Eigen::Index r = 0; r < logits.rows(); ++r) {
    const double mx = logits.row(r).maxCoeff();
    Eigen::RowVectorXd e = (logits.row(r).array() - mx).exp();
    p.row(r) = e / e.sum();
  }
  return p;
}

}  // namespace

ForwardCache forward(const MlpNetwork& net, const Eigen::MatrixXd& batch,
                     Mode mode, Rng* rng) {
  if (batch.cols() != net.input_dim()) {
    throw Error("forward: batch has " + std::to_string(batch.cols()) +
                " columns, network expects " + std::to_string(net.input_dim()));
  }
  if (mode == Mode::Train && rng == nullptr) {
    throw Error("forward: train mode requires an RNG for dropout");
  }

  ForwardCache cache;
  cache.mode = mode;
  const std::size_t n_layers = net.layers.size();
  cache.inputs.resize(n_layers);
  cache.preacts.resize(n_layers > 0 ? n_layers - 1 : 0);
  if (mode == Mode::Train) cache.masks.resize(n_layers);

  Eigen::MatrixXd act = batch;
  for (std::size_t i = 0; i < n_layers; ++i) {
    if (mode == Mode::Train && net.dropout[i] > 0.0) {
      cache.masks[i] = sample_mask(act.rows(), act.cols(), net.dropout[i], *rng);
      act = act.cwiseProduct(cache.masks[i]);
    } else if (mode == Mode::Train) {
      cache.masks[i].resize(0, 0);  // rate 0: identity, no mask stored
    }
    cache.inputs[i] = act;

    Eigen::MatrixXd z = (act * net.layers[i].w.transpose()).rowwise() + net.layers[i].b;
    if (i + 1 < n_layers) {
      cache.preacts[i] = z;
      act = z.unaryExpr([s = net.leaky_slope](double x) { return leaky_relu(x, s); });
    } else {
      cache.logits = std::move(z);
    }
  }

  cache.output = (net.output_kind == OutputKind::Softmax2)
                     ? softmax_rows(cache.logits)
                     : cache.logits;
  return cache;
}

void Gradients::accumulate(const Gradients& other) {
  for (std::size_t i = 0; i < dw.size(); ++i) {
    dw[i] += other.dw[i];
    db[i] += other.db[i];
  }
  if (dinput.size() > 0 && other.dinput.size() > 0) dinput += other.dinput;
}

Gradients zero_gradients(const MlpNetwork& net, Eigen::Index batch_rows) {
  Gradients g;
  g.dw.reserve(net.layers.size());
  g.db.reserve(net.layers.size());
  for (const auto& l : net.layers) {
    g.dw.emplace_back(Eigen::MatrixXd::Zero(l.w.rows(), l.w.cols()));
    g.db.emplace_back(Eigen::RowVectorXd::Zero(l.b.size()));
  }
  g.dinput = Eigen::MatrixXd::Zero(batch_rows, net.input_dim());
  return g;
}

Gradients backward(const MlpNetwork& net, const ForwardCache& cache,
                   const Eigen::MatrixXd& grad_logits) {
  const std::size_t n_layers = net.layers.size();
  if (cache.inputs.size() != n_layers) {
    throw Error("backward: cache does not match network layout");
  }
  if (grad_logits.rows() != cache.logits.rows() ||
      grad_logits.cols() != cache.logits.cols()) {
    throw Error("backward: gradient shape does not match cached outputs");
  }

  Gradients g;
  g.dw.resize(n_layers);
  g.db.resize(n_layers);

  Eigen::MatrixXd dz = grad_logits;
  for (std::size_t idx = n_layers; idx-- > 0;) {
    g.dw[idx] = dz.transpose() * cache.inputs[idx];
    g.db[idx] = dz.colwise().sum();
    Eigen::MatrixXd din = dz * net.layers[idx].w;

    // Undo this layer's input dropout.
    if (cache.mode == Mode::Train && cache.masks[idx].size() > 0) {
      din = din.cwiseProduct(cache.masks[idx]);
    }

    if (idx == 0) {
      g.dinput = std::move(din);
      break;
    }
    // Through the previous layer's LeakyReLU.
    const Eigen::MatrixXd& z = cache.preacts[idx - 1];
    dz = din.binaryExpr(z, [s = net.leaky_slope](double d, double zz) {
      return zz >= 0.0 ? d : s * d;
    });
  }
  return g;
}

void sgd_step(Eigen::Ref<Eigen::MatrixXd> params, const Eigen::MatrixXd& grads,
              double lr) {
  if (!grads.allFinite()) {
    throw TrainingError("sgd_step: non-finite gradient");
  }
  params -= lr * grads;
}

void sgd_step(Eigen::Ref<Eigen::RowVectorXd> params,
              const Eigen::RowVectorXd& grads, double lr) {
  if (!grads.allFinite()) {
    throw TrainingError("sgd_step: non-finite gradient");
  }
  params -= lr * grads;
}

void adagrad_step(Eigen::Ref<Eigen::MatrixXd> params,
                  const Eigen::MatrixXd& grads,
                  Eigen::Ref<Eigen::MatrixXd> acc, double lr, double eps) {
  if (!grads.allFinite()) {
    throw TrainingError("adagrad_step: non-finite gradient");
  }
  acc.array() += grads.array().square();
  params.array() -= lr * grads.array() / (acc.array().sqrt() + eps);
}

void adagrad_step(Eigen::Ref<Eigen::RowVectorXd> params,
                  const Eigen::RowVectorXd& grads,
                  Eigen::Ref<Eigen::RowVectorXd> acc, double lr, double eps) {
  if (!grads.allFinite()) {
    throw TrainingError("adagrad_step: non-finite gradient");
  }
  acc.array() += grads.array().square();
  params.array() -= lr * grads.array() / (acc.array().sqrt() + eps);
}

OptimizerState make_optimizer(const MlpNetwork& net, OptimizerKind kind,
                              double lr, double epsilon) {
  OptimizerState st;
  st.kind = kind;
  st.lr = lr;
  st.epsilon = epsilon;
  if (kind == OptimizerKind::Adagrad) {
    for (const auto& l : net.layers) {
      st.acc_w.emplace_back(Eigen::MatrixXd::Zero(l.w.rows(), l.w.cols()));
      st.acc_b.emplace_back(Eigen::RowVectorXd::Zero(l.b.size()));
    }
  }
  return st;
}

void apply_gradients(MlpNetwork& net, const Gradients& grads,
                     OptimizerState& state) {
  for (std::size_t i = 0; i < net.layers.size(); ++i) {
    if (state.kind == OptimizerKind::Sgd) {
      sgd_step(net.layers[i].w, grads.dw[i], state.lr);
      sgd_step(net.layers[i].b, grads.db[i], state.lr);
    } else {
      adagrad_step(net.layers[i].w, grads.dw[i], state.acc_w[i], state.lr,
                   state.epsilon);
      adagrad_step(net.layers[i].b, grads.db[i], state.acc_b[i], state.lr,
                   state.epsilon);
    }
  }
}

namespace {

double fd_error(double analytic, double numeric) {
  return std::abs(analytic - numeric) /
         std::max({1.0, std::abs(analytic), std::abs(numeric)});
}

}  // namespace

double grad_check_matrix(Eigen::MatrixXd& params,
                         const std::function<double()>& loss,
                         const Eigen::MatrixXd& analytic, int n_samples,
                         double step, Rng& rng) {
  double worst = 0.0;
  const Eigen::Index total = params.size();
  for (int s = 0; s < n_samples; ++s) {
    const Eigen::Index flat = static_cast<Eigen::Index>(rng.index(static_cast<std::size_t>(total)));
    double* p = params.data() + flat;
    const double orig = *p;
    *p = orig + step;
    const double up = loss();
    *p = orig - step;
    const double down = loss();
    *p = orig;
    const double numeric = (up - down) / (2.0 * step);
    worst = std::max(worst, fd_error(analytic.data()[flat], numeric));
  }
  return worst;
}

double grad_check(MlpNetwork& net, const std::function<double()>& loss,
                  const Gradients& analytic, int n_samples, double step,
                  Rng& rng) {
  double worst = 0.0;
  for (int s = 0; s < n_samples; ++s) {
    const std::size_t li = rng.index(net.layers.size());
    auto& layer = net.layers[li];
    const bool pick_bias = rng.bernoulli(
        static_cast<double>(layer.b.size()) /
        static_cast<double>(layer.w.size() + layer.b.size()));
    double* p;
    double an;
    if (pick_bias) {
      const Eigen::Index k = static_cast<Eigen::Index>(rng.index(static_cast<std::size_t>(layer.b.size())));
      p = layer.b.data() + k;
      an = analytic.db[li](k);
    } else {
      const Eigen::Index k = static_cast<Eigen::Index>(rng.index(static_cast<std::size_t>(layer.w.size())));
      p = layer.w.data() + k;
      an = analytic.dw[li].data()[k];
    }
    const double orig = *p;
    *p = orig + step;
    const double up = loss();
    *p = orig - step;
    const double down = loss();
    *p = orig;
    const double numeric = (up - down) / (2.0 * step);
    worst = std::max(worst, fd_error(an, numeric));
  }
  return worst;
}

// ---- checkpoint ------------------------------------------------------------

void save_network(const MlpNetwork& net, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw IoError(path, "cannot open for writing");

  out << "mlpnet 1\n";
  out << net.input_dim() << ' ' << net.output_dim() << ' ' << net.hidden_count()
      << ' ' << (net.hidden_count() > 0 ? net.layers.front().w.rows() : 0) << ' '
      << format_double(net.leaky_slope) << ' '
      << (net.output_kind == OutputKind::Linear ? "linear" : "softmax2") << '\n';
  out << "dropout";
  for (double r : net.dropout) out << ' ' << format_double(r);
  out << '\n';
  for (const auto& l : net.layers) {
    out << "layer " << l.w.rows() << ' ' << l.w.cols() << '\n';
    for (Eigen::Index r = 0; r < l.w.rows(); ++r) {
      for (Eigen::Index c = 0; c < l.w.cols(); ++c) {
        if (c) out << ' ';
        out << format_double(l.w(r, c));
      }
      out << '\n';
    }
    for (Eigen::Index k = 0; k < l.b.size(); ++k) {
      if (k) out << ' ';
      out << format_double(l.b(k));
    }
    out << '\n';
  }
  if (!out) throw IoError(path, "write failed");
}

MlpNetwork load_network(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError(path, "cannot open for reading");

  std::string magic;
  int version = 0;
  if (!(in >> magic >> version) || magic != "mlpnet" || version != 1) {
    throw ParseError(path, 1, "not a version-1 mlpnet checkpoint");
  }

  MlpNetwork net;
  Eigen::Index in_dim = 0, out_dim = 0, h = 0;
  std::size_t hidden = 0;
  std::string slope_tok, kind_tok;
  if (!(in >> in_dim >> out_dim >> hidden >> h >> slope_tok >> kind_tok)) {
    throw ParseError(path, 2, "malformed header");
  }
  if (!parse_double(slope_tok, net.leaky_slope)) {
    throw ParseError(path, 2, "malformed slope value");
  }
  if (kind_tok == "linear") {
    net.output_kind = OutputKind::Linear;
  } else if (kind_tok == "softmax2") {
    net.output_kind = OutputKind::Softmax2;
  } else {
    throw ParseError(path, 2, "unknown output kind '" + kind_tok + "'");
  }

  std::string tag;
  if (!(in >> tag) || tag != "dropout") throw ParseError(path, 3, "expected dropout line");
  net.dropout.resize(hidden + 1);
  for (auto& r : net.dropout) {
    std::string tok;
    if (!(in >> tok) || !parse_double(tok, r)) {
      throw ParseError(path, 3, "malformed dropout rate");
    }
  }

  for (std::size_t li = 0; li <= hidden; ++li) {
    Eigen::Index rows = 0, cols = 0;
    if (!(in >> tag >> rows >> cols) || tag != "layer" || rows <= 0 || cols <= 0) {
      throw ParseError(path, 0, "malformed layer header");
    }
    MlpNetwork::Layer layer;
    layer.w.resize(rows, cols);
    for (Eigen::Index r = 0; r < rows; ++r) {
      for (Eigen::Index c = 0; c < cols; ++c) {
        std::string tok;
        if (!(in >> tok) || !parse_double(tok, layer.w(r, c))) {
          throw ParseError(path, 0, "malformed weight value");
        }
      }
    }
    layer.b.resize(rows);
    for (Eigen::Index k = 0; k < rows; ++k) {
      std::string tok;
      if (!(in >> tok) || !parse_double(tok, layer.b(k))) {
        throw ParseError(path, 0, "malformed bias value");
      }
    }
    net.layers.push_back(std::move(layer));
  }

  if (net.layers.front().w.cols() != in_dim ||
      net.layers.back().w.rows() != out_dim) {
    throw ParseError(path, 0, "layer dims do not match header");
  }
  for (std::size_t i = 0; i + 1 < net.layers.size(); ++i) {
    if (net.layers[i].w.rows() != net.layers[i + 1].w.cols()) {
      throw ParseError(path, 0, "layer dimension chain broken");
    }
  }
  return net;
}

}  // namespace vecspec
