#include "doctest.h"

#include <chrono>
#include <cmath>

#include "vecspec/errors.hpp"
#include "vecspec/postspec.hpp"
#include "vecspec/synthetic.hpp"

using namespace vecspec;

namespace {

PostSpecConfig small_config() {
  PostSpecConfig cfg;
  cfg.hidden_size = 64;
  cfg.batch_size = 32;
  cfg.negatives_per_pair = 10;
  cfg.epochs = 10;
  cfg.iterations_per_epoch = 100;
  cfg.lr = 0.15;
  cfg.g_dropout = 0.1;
  cfg.validation_fraction = 0.1;
  return cfg;
}

}  // namespace

TEST_CASE("mm_loss hand-evaluated values") {
  SUBCASE("satisfied margin") {
    // cos(pred, target) = 1, cos(pred, neg) = -1, margin 1, one negative
    Eigen::MatrixXd preds(2, 2), targets(2, 2);
    preds << 1, 0, 0, 1;
    targets << 1, 0, -1, 0;
    const std::vector<std::vector<std::size_t>> negs = {{1}, {}};
    CHECK(mm_loss(preds, targets, negs, 1.0) == 0.0);
  }
  SUBCASE("orthogonal prediction with a perfect confounder") {
    // cos(pred, target) = 0, cos(pred, neg) = 1, margin 1 -> tau(2) = 2
    Eigen::MatrixXd preds(2, 2), targets(2, 2);
    preds << 1, 0, 0, 1;
    targets << 0, 1, 1, 0;
    const std::vector<std::vector<std::size_t>> negs = {{1}, {}};
    CHECK(mm_loss(preds, targets, negs, 1.0) == doctest::Approx(2.0).epsilon(1e-12));
  }
  SUBCASE("empty batch") {
    Eigen::MatrixXd e(0, 2);
    CHECK(mm_loss(e, e, {}, 1.0) == 0.0);
  }
  SUBCASE("negative list containing the pair itself is rejected") {
    Eigen::MatrixXd preds(2, 2), targets(2, 2);
    preds.setIdentity();
    targets.setIdentity();
    const std::vector<std::vector<std::size_t>> negs = {{0}, {}};
    CHECK_THROWS_AS(mm_loss(preds, targets, negs, 1.0), Error);
  }
}

TEST_CASE("mm_loss is zero iff every margin is satisfied") {
  Rng rng(50);
  for (int round = 0; round < 40; ++round) {
    const Eigen::Index n = 6, d = 5;
    Eigen::MatrixXd preds(n, d), targets(n, d);
    for (Eigen::Index r = 0; r < n; ++r) {
      for (Eigen::Index c = 0; c < d; ++c) {
        preds(r, c) = rng.normal();
        targets(r, c) = rng.normal();
      }
    }
    auto negs = sample_negatives(n, 3, rng);
    const double margin = rng.uniform(0.0, 1.0);
    const double loss = mm_loss(preds, targets, negs, margin);

    bool all_satisfied = true;
    for (Eigen::Index i = 0; i < n; ++i) {
      for (std::size_t j : negs[static_cast<std::size_t>(i)]) {
        const double pos = cosine(preds.row(i), targets.row(i));
        const double neg = cosine(preds.row(i), targets.row(static_cast<Eigen::Index>(j)));
        if (margin - pos + neg > 0.0) all_satisfied = false;
      }
    }
    CHECK((loss == 0.0) == all_satisfied);
    CHECK(loss >= 0.0);
  }
}

TEST_CASE("mm_loss gradient w.r.t. predictions matches finite differences") {
  Rng rng(51);
  const Eigen::Index n = 8, d = 6;
  Eigen::MatrixXd preds(n, d), targets(n, d);
  for (Eigen::Index r = 0; r < n; ++r) {
    for (Eigen::Index c = 0; c < d; ++c) {
      preds(r, c) = rng.normal();
      targets(r, c) = rng.normal();
    }
  }
  const auto negs = sample_negatives(n, 4, rng);
  Eigen::MatrixXd analytic;
  mm_loss(preds, targets, negs, 0.6, &analytic);

  auto loss = [&]() { return mm_loss(preds, targets, negs, 0.6); };
  Rng pick(52);
  CHECK(grad_check_matrix(preds, loss, analytic, 200, 1e-6, pick) < 1e-4);
}

TEST_CASE("sample_negatives never includes the anchor row") {
  Rng rng(53);
  const auto negs = sample_negatives(12, 5, rng);
  for (std::size_t i = 0; i < negs.size(); ++i) {
    CHECK(negs[i].size() == 5);
    for (std::size_t j : negs[i]) {
      CHECK(j != i);
      CHECK(j < 12);
    }
  }
}

TEST_CASE("changed_pairs keeps only words the initial stage moved") {
  Eigen::MatrixXd m(3, 2);
  m << 1, 0, 0, 1, std::sqrt(0.5), std::sqrt(0.5);
  const auto original = EmbeddingSpace::create({"a", "b", "c"}, m);
  Eigen::MatrixXd m2 = m;
  m2.row(0) << 0, 1;  // only "a" moved
  const auto specialized = EmbeddingSpace::create({"a", "b", "c"}, m2);

  const auto pairs = changed_pairs(original, specialized);
  CHECK(pairs.count() == 1);
  CHECK(pairs.x.row(0) == m.row(0));
  CHECK(pairs.y.row(0) == m2.row(0));
}

TEST_CASE("train_postspec learns a synthetic nonlinear map") {
  const SyntheticConfig scfg;  // dim 32
  const auto task = make_synthetic_task(1200, 300, scfg, 7);
  const auto result = train_postspec(task.seen_pairs(), small_config(), 7);

  const double heldout = mean_mapped_cosine(result.net, task.heldout_pairs());
  CHECK(heldout > 0.9);

  // Validation score should improve in most epochs on this easy task.
  std::size_t nondecreasing = 0;
  for (std::size_t i = 1; i < result.log.size(); ++i) {
    if (result.log[i].val_cosine >= result.log[i - 1].val_cosine - 1e-9) {
      ++nondecreasing;
    }
  }
  CHECK(nondecreasing * 10 >= (result.log.size() - 1) * 8);  // >= 80%
}

TEST_CASE("train_postspec rejects degenerate inputs") {
  TrainPairs empty;
  empty.x.resize(0, 4);
  empty.y.resize(0, 4);
  CHECK_THROWS_AS(train_postspec(empty, small_config(), 1), Error);

  TrainPairs few;
  few.x = Eigen::MatrixXd::Random(8, 4);
  few.y = Eigen::MatrixXd::Random(8, 4);
  CHECK_THROWS_AS(train_postspec(few, small_config(), 1), Error);
}

TEST_CASE("PostSpecConfig invariants") {
  PostSpecConfig cfg;
  cfg.batch_size = 10;
  cfg.negatives_per_pair = 10;  // must be strictly smaller than batch
  CHECK_THROWS_WITH_AS(cfg.validate(), doctest::Contains("batch_size"), ConfigError);
}

TEST_CASE("apply_map") {
  SUBCASE("identity-configured net returns normalized input") {
    MlpNetwork net;
    net.output_kind = OutputKind::Linear;
    net.dropout = {0.0};
    net.layers.push_back({Eigen::MatrixXd::Identity(3, 3), Eigen::RowVectorXd::Zero(3)});

    Eigen::MatrixXd m(2, 3);
    m << 2, 0, 0, 0, 0, 5;
    const auto space = EmbeddingSpace::create({"a", "b"}, m);
    const auto mapped = apply_map(net, space);
    CHECK(mapped.matrix(0, 0) == doctest::Approx(1.0));
    CHECK(mapped.matrix(1, 2) == doctest::Approx(1.0));
  }
  SUBCASE("frozen net is deterministic: bitwise-equal outputs") {
    Rng rng(60);
    const auto net = make_mlp(8, 2, 16, 8, OutputKind::Linear, 0.2,
                              {0.2, 0.2, 0.2}, rng);
    Eigen::MatrixXd m = Eigen::MatrixXd::Random(50, 8);
    const auto space = EmbeddingSpace::create(
        [] {
          std::vector<std::string> w;
          for (int i = 0; i < 50; ++i) w.push_back("w" + std::to_string(i));
          return w;
        }(),
        m);
    const auto a = apply_map(net, space);
    const auto b = apply_map(net, space);
    CHECK(a.matrix == b.matrix);
  }
  SUBCASE("dimension mismatch rejected") {
    Rng rng(61);
    const auto net = make_mlp(8, 1, 8, 8, OutputKind::Linear, 0.2, {0.0, 0.0}, rng);
    Eigen::MatrixXd m = Eigen::MatrixXd::Random(3, 5);
    CHECK_THROWS_AS(apply_map(net, EmbeddingSpace::create({"a", "b", "c"}, m)), Error);
  }
  SUBCASE("10k-word space transforms in seconds") {
    Rng rng(62);
    const auto net = make_mlp(32, 2, 256, 32, OutputKind::Linear, 0.2,
                              {0.2, 0.2, 0.2}, rng);
    SyntheticConfig scfg;
    Eigen::MatrixXd m = sample_directions(10000, scfg, rng);
    std::vector<std::string> words;
    for (int i = 0; i < 10000; ++i) words.push_back("w" + std::to_string(i));
    const auto space = EmbeddingSpace::create(words, m);

    const auto start = std::chrono::steady_clock::now();
    const auto mapped = apply_map(net, space);
    const auto secs = std::chrono::duration<double>(
                          std::chrono::steady_clock::now() - start).count();
    CHECK(mapped.size() == 10000);
    CHECK(secs < 10.0);
  }
}
