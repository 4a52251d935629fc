#include "doctest.h"

#include <cmath>

#include "util.hpp"
#include "vecspec/errors.hpp"
#include "vecspec/nn.hpp"

using namespace vecspec;

namespace {

MlpNetwork tiny_net(Eigen::Index in, std::size_t hidden, Eigen::Index h,
                    Eigen::Index out, OutputKind kind, std::uint64_t seed,
                    std::vector<double> dropout = {}) {
  Rng rng(seed);
  if (dropout.empty()) dropout.assign(hidden + 1, 0.0);
  return make_mlp(in, hidden, h, out, kind, 0.2, dropout, rng);
}

Eigen::MatrixXd random_batch(Eigen::Index rows, Eigen::Index cols,
                             std::uint64_t seed) {
  Rng rng(seed);
  Eigen::MatrixXd m(rows, cols);
  for (Eigen::Index r = 0; r < rows; ++r) {
    for (Eigen::Index c = 0; c < cols; ++c) m(r, c) = rng.normal();
  }
  return m;
}

}  // namespace

TEST_CASE("activations") {
  CHECK(leaky_relu(5.0, 0.2) == 5.0);
  CHECK(leaky_relu(0.0, 0.2) == 0.0);
  CHECK(leaky_relu(-2.0, 0.2) == doctest::Approx(-0.4).epsilon(1e-15));
  CHECK(rectifier(-1.0) == 0.0);
  CHECK(rectifier(0.0) == 0.0);
  CHECK(rectifier(0.3) == 0.3);
}

TEST_CASE("forward zero network maps everything to zero") {
  auto net = tiny_net(3, 1, 4, 2, OutputKind::Linear, 1);
  for (auto& l : net.layers) {
    l.w.setZero();
    l.b.setZero();
  }
  const auto cache = forward(net, random_batch(5, 3, 2), Mode::Eval);
  CHECK(cache.output.cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("identity-configured single layer is the identity in eval mode") {
  MlpNetwork net;
  net.output_kind = OutputKind::Linear;
  net.dropout = {0.0};
  net.layers.push_back({Eigen::MatrixXd::Identity(4, 4), Eigen::RowVectorXd::Zero(4)});
  const auto batch = random_batch(6, 4, 3);
  const auto cache = forward(net, batch, Mode::Eval);
  CHECK(cache.output == batch);
}

TEST_CASE("drop rate 1.0 on the input zeroes hidden pre-activations") {
  auto net = tiny_net(3, 1, 4, 2, OutputKind::Linear, 4, {1.0, 0.0});
  Rng rng(9);
  const auto cache = forward(net, random_batch(5, 3, 5), Mode::Train, &rng);
  CHECK(cache.preacts[0].cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("eval-mode forward is a pure function") {
  auto net = tiny_net(4, 2, 8, 3, OutputKind::Linear, 6);
  const auto batch = random_batch(7, 4, 7);
  const auto a = forward(net, batch, Mode::Eval).output;
  const auto b = forward(net, batch, Mode::Eval).output;
  CHECK(a == b);
}

TEST_CASE("forward shape errors") {
  auto net = tiny_net(4, 1, 4, 2, OutputKind::Linear, 8);
  CHECK_THROWS_AS(forward(net, random_batch(2, 5, 1), Mode::Eval), Error);
  CHECK_THROWS_AS(forward(net, random_batch(2, 4, 1), Mode::Train, nullptr), Error);
}

TEST_CASE("backward of a linear net gives the input outer product") {
  MlpNetwork net;
  net.output_kind = OutputKind::Linear;
  net.dropout = {0.0};
  Rng rng(10);
  net.layers.push_back({Eigen::MatrixXd::Random(3, 4), Eigen::RowVectorXd::Zero(3)});

  const auto batch = random_batch(1, 4, 11);
  const auto cache = forward(net, batch, Mode::Eval);
  Eigen::MatrixXd dout = random_batch(1, 3, 12);
  const auto grads = backward(net, cache, dout);
  const Eigen::MatrixXd expected = dout.transpose() * batch;
  CHECK((grads.dw[0] - expected).cwiseAbs().maxCoeff() < 1e-15);
  CHECK(grads.db[0] == Eigen::RowVectorXd(dout.row(0)));

  SUBCASE("zero output gradient gives zero parameter gradients") {
    const auto zero = backward(net, cache, Eigen::MatrixXd::Zero(1, 3));
    CHECK(zero.dw[0].cwiseAbs().maxCoeff() == 0.0);
    CHECK(zero.dinput.cwiseAbs().maxCoeff() == 0.0);
  }
  SUBCASE("stale cache shape rejected") {
    CHECK_THROWS_AS(backward(net, cache, Eigen::MatrixXd::Zero(2, 3)), Error);
  }
}

TEST_CASE("backward matches central finite differences on a random net") {
  // 2 -> 16 -> 16 -> 4 with LeakyReLU, L2-style loss on the outputs.
  auto net = tiny_net(2, 2, 16, 4, OutputKind::Linear, 13);
  const auto batch = random_batch(6, 2, 14);
  const Eigen::MatrixXd targets = random_batch(6, 4, 15);

  auto loss_value = [&]() {
    const auto out = forward(net, batch, Mode::Eval).output;
    return 0.5 * (out - targets).squaredNorm();
  };
  const auto cache = forward(net, batch, Mode::Eval);
  const auto grads = backward(net, cache, cache.output - targets);

  Rng rng(16);
  const double err = grad_check(net, loss_value, grads, 200, 1e-5, rng);
  CHECK(err < 1e-4);
}

TEST_CASE("backward through train-mode dropout reuses the recorded masks") {
  auto net = tiny_net(3, 2, 8, 3, OutputKind::Linear, 17, {0.3, 0.2, 0.2});
  // Nonzero biases keep fully-dropped rows away from the LeakyReLU kink,
  // where central differences straddle two subgradients.
  {
    Rng brng(170);
    for (auto& l : net.layers) {
      for (Eigen::Index k = 0; k < l.b.size(); ++k) l.b(k) = brng.normal();
    }
  }
  const auto batch = random_batch(5, 3, 18);
  const Eigen::MatrixXd targets = random_batch(5, 3, 19);

  // Fixed masks: every loss evaluation replays the same rng stream.
  const std::uint64_t mask_seed = 20;
  auto loss_value = [&]() {
    Rng rng(mask_seed);
    const auto out = forward(net, batch, Mode::Train, &rng).output;
    return 0.5 * (out - targets).squaredNorm();
  };
  Rng rng(mask_seed);
  const auto cache = forward(net, batch, Mode::Train, &rng);
  const auto grads = backward(net, cache, cache.output - targets);

  Rng pick(21);
  const double err = grad_check(net, loss_value, grads, 150, 1e-5, pick);
  CHECK(err < 1e-4);
}

TEST_CASE("grad_check flags a corrupted backward pass") {
  auto net = tiny_net(2, 1, 8, 2, OutputKind::Linear, 22);
  const auto batch = random_batch(4, 2, 23);
  const Eigen::MatrixXd targets = random_batch(4, 2, 24);

  auto loss_value = [&]() {
    const auto out = forward(net, batch, Mode::Eval).output;
    return 0.5 * (out - targets).squaredNorm();
  };
  const auto cache = forward(net, batch, Mode::Eval);
  auto grads = backward(net, cache, cache.output - targets);
  grads.dw[0] *= 1.5;  // deliberate corruption

  Rng rng(25);
  CHECK(grad_check(net, loss_value, grads, 200, 1e-5, rng) > 1e-2);
}

TEST_CASE("grad_check on a linear net with L2 loss is near-exact") {
  MlpNetwork net;
  net.output_kind = OutputKind::Linear;
  net.dropout = {0.0};
  net.layers.push_back({Eigen::MatrixXd::Random(3, 3), Eigen::RowVectorXd::Zero(3)});
  const auto batch = random_batch(4, 3, 26);
  const Eigen::MatrixXd targets = random_batch(4, 3, 27);

  auto loss_value = [&]() {
    const auto out = forward(net, batch, Mode::Eval).output;
    return 0.5 * (out - targets).squaredNorm();
  };
  const auto cache = forward(net, batch, Mode::Eval);
  const auto grads = backward(net, cache, cache.output - targets);
  Rng rng(28);
  CHECK(grad_check(net, loss_value, grads, 100, 1e-5, rng) < 1e-8);
}

TEST_CASE("sgd_step") {
  Eigen::MatrixXd p(1, 1), g(1, 1);
  p << 1.0;
  g << 2.0;
  sgd_step(p, g, 0.0);
  CHECK(p(0, 0) == 1.0);
  sgd_step(p, g, 0.1);
  CHECK(p(0, 0) == doctest::Approx(0.8).epsilon(1e-15));

  SUBCASE("quadratic bowl converges") {
    Eigen::MatrixXd x(1, 1);
    x << 1.0;
    for (int i = 0; i < 50; ++i) {
      Eigen::MatrixXd grad = 2.0 * x;  // d/dx x^2
      sgd_step(x, grad, 0.1);
    }
    CHECK(std::abs(x(0, 0)) < 1e-4);
  }
  SUBCASE("non-finite gradient aborts") {
    g << std::nan("");
    CHECK_THROWS_AS(sgd_step(p, g, 0.1), TrainingError);
  }
}

TEST_CASE("adagrad_step") {
  SUBCASE("first step with unit gradient moves by about -lr") {
    Eigen::MatrixXd p(1, 1), g(1, 1), acc(1, 1);
    p << 0.0;
    g << 1.0;
    acc << 0.0;
    adagrad_step(p, g, acc, 0.1, 1e-8);
    CHECK(p(0, 0) == doctest::Approx(-0.1).epsilon(1e-6));
    CHECK(acc(0, 0) == 1.0);
  }
  SUBCASE("zero gradient changes nothing") {
    Eigen::MatrixXd p(2, 2), g = Eigen::MatrixXd::Zero(2, 2), acc(2, 2);
    p.setRandom();
    acc.setConstant(0.5);
    const Eigen::MatrixXd before = p;
    adagrad_step(p, g, acc, 0.1, 1e-8);
    CHECK(p == before);
    CHECK(acc == Eigen::MatrixXd::Constant(2, 2, 0.5));
  }
  SUBCASE("repeated identical gradients give strictly decreasing steps") {
    Eigen::MatrixXd p(1, 1), g(1, 1), acc(1, 1);
    p << 5.0;
    g << 1.0;
    acc << 0.0;
    double prev_step = 1e9;
    for (int i = 0; i < 20; ++i) {
      const double before = p(0, 0);
      adagrad_step(p, g, acc, 0.1, 1e-8);
      const double step = std::abs(p(0, 0) - before);
      CHECK(step < prev_step);
      prev_step = step;
    }
  }
}

TEST_CASE("checkpoint round-trip reproduces eval outputs bitwise") {
  testutil::TempDir tmp;
  Rng rng(32);
  auto net = make_mlp(5, 2, 9, 2, OutputKind::Softmax2, 0.2, {0.1, 0.0, 0.0}, rng);

  const auto path = tmp.file("net.ckpt");
  save_network(net, path);
  const auto loaded = load_network(path);
  CHECK(loaded.output_kind == OutputKind::Softmax2);
  CHECK(loaded.leaky_slope == net.leaky_slope);
  CHECK(loaded.dropout == net.dropout);

  const auto batch = random_batch(6, 5, 33);
  CHECK(forward(net, batch, Mode::Eval).output ==
        forward(loaded, batch, Mode::Eval).output);
}

TEST_CASE("load_network rejects malformed checkpoints") {
  testutil::TempDir tmp;
  const auto path = tmp.file("bad.ckpt");
  testutil::write_file(path, "not a checkpoint\n");
  CHECK_THROWS_AS(load_network(path), ParseError);
}
