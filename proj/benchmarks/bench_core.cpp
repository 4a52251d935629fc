#include <benchmark/benchmark.h>

#include "vecspec/attract_repel.hpp"
#include "vecspec/nn.hpp"
#include "vecspec/postspec.hpp"
#include "vecspec/synthetic.hpp"
#include "vecspec/xling.hpp"

using namespace vecspec;

namespace {

Eigen::MatrixXd unit_rows(Eigen::Index n, Eigen::Index d, std::uint64_t seed) {
  Rng rng(seed);
  Eigen::MatrixXd m(n, d);
  for (Eigen::Index r = 0; r < n; ++r) {
    for (Eigen::Index c = 0; c < d; ++c) m(r, c) = rng.normal();
    m.row(r) /= m.row(r).norm();
  }
  return m;
}

}  // namespace

static void BM_ForwardEval(benchmark::State& state) {
  const Eigen::Index d = 300, h = state.range(0);
  Rng rng(1);
  const auto net = make_mlp(d, 2, h, d, OutputKind::Linear, 0.2, {0.2, 0.2, 0.2}, rng);
  const Eigen::MatrixXd batch = unit_rows(32, d, 2);
  for (auto _ : state) {
    auto cache = forward(net, batch, Mode::Eval);
    benchmark::DoNotOptimize(cache.output);
  }
  state.SetItemsProcessed(state.iterations() * 32);
}
BENCHMARK(BM_ForwardEval)->Arg(256)->Arg(1024)->Arg(2048);

static void BM_ForwardBackwardTrain(benchmark::State& state) {
  const Eigen::Index d = 300, h = state.range(0);
  Rng rng(1);
  const auto net = make_mlp(d, 2, h, d, OutputKind::Linear, 0.2, {0.2, 0.2, 0.2}, rng);
  const Eigen::MatrixXd batch = unit_rows(32, d, 2);
  Rng drop(3);
  for (auto _ : state) {
    auto cache = forward(net, batch, Mode::Train, &drop);
    auto grads = backward(net, cache, cache.output);
    benchmark::DoNotOptimize(grads.dw.back());
  }
  state.SetItemsProcessed(state.iterations() * 32);
}
BENCHMARK(BM_ForwardBackwardTrain)->Arg(256)->Arg(1024)->Arg(2048);

static void BM_MineNegatives(benchmark::State& state) {
  const Eigen::Index pairs = state.range(0);
  const Eigen::MatrixXd m = unit_rows(4 * pairs, 300, 4);
  std::vector<IndexPair> ba, br;
  for (Eigen::Index i = 0; i < pairs; ++i) {
    ba.push_back({static_cast<std::size_t>(2 * i), static_cast<std::size_t>(2 * i + 1)});
    br.push_back({static_cast<std::size_t>(2 * pairs + 2 * i),
                  static_cast<std::size_t>(2 * pairs + 2 * i + 1)});
  }
  for (auto _ : state) {
    auto negs = mine_negatives(m, ba, br);
    benchmark::DoNotOptimize(negs.attract_left);
  }
  state.SetItemsProcessed(state.iterations() * pairs * 2);
}
BENCHMARK(BM_MineNegatives)->Arg(50)->Arg(200);

static void BM_MmLoss(benchmark::State& state) {
  const Eigen::MatrixXd preds = unit_rows(32, 300, 5);
  const Eigen::MatrixXd targets = unit_rows(32, 300, 6);
  Rng rng(7);
  const auto negs = sample_negatives(32, 25, rng);
  Eigen::MatrixXd grads;
  for (auto _ : state) {
    double loss = mm_loss(preds, targets, negs, 0.6, &grads);
    benchmark::DoNotOptimize(loss);
  }
}
BENCHMARK(BM_MmLoss);

static void BM_Procrustes(benchmark::State& state) {
  const Eigen::Index d = state.range(0);
  Rng rng(8);
  const Eigen::MatrixXd r = random_orthogonal(d, rng);
  const Eigen::MatrixXd xs = unit_rows(4 * d, d, 9);
  const Eigen::MatrixXd xt = xs * r.transpose();
  for (auto _ : state) {
    auto map = procrustes(xt, xs);
    benchmark::DoNotOptimize(map.w);
  }
}
BENCHMARK(BM_Procrustes)->Arg(50)->Arg(300);

static void BM_CslsNeighborhood(benchmark::State& state) {
  const Eigen::Index n = state.range(0);
  const Eigen::MatrixXd queries = unit_rows(n, 300, 10);
  const Eigen::MatrixXd cands = unit_rows(n, 300, 11);
  for (auto _ : state) {
    auto r = mean_topk_cosine(queries, cands, 10);
    benchmark::DoNotOptimize(r);
  }
  state.SetItemsProcessed(state.iterations() * n);
}
BENCHMARK(BM_CslsNeighborhood)->Arg(1000)->Arg(5000);

BENCHMARK_MAIN();
