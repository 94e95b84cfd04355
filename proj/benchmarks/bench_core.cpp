#include <benchmark/benchmark.h>

#include <vector>

#include "plr/dataset.hpp"
#include "plr/losses.hpp"
#include "plr/model.hpp"
#include "plr/trainer.hpp"

namespace {

using namespace plr;

Matrix random_matrix(std::size_t rows, std::size_t cols, Rng& rng) {
  Matrix m(rows, cols);
  for (std::size_t i = 0; i < rows * cols; ++i) m.data()[i] = rng.uniform(-1.0, 1.0);
  return m;
}

void BM_matmul(benchmark::State& state) {
  Rng rng(1);
  const auto n = static_cast<std::size_t>(state.range(0));
  const Matrix a = random_matrix(n, n, rng);
  const Matrix b = random_matrix(n, n, rng);
  for (auto _ : state) {
    benchmark::DoNotOptimize(matmul(a, b));
  }
  state.SetItemsProcessed(state.iterations() * n * n * n);
}
BENCHMARK(BM_matmul)->Arg(16)->Arg(64)->Arg(128);

void BM_mlp_forward(benchmark::State& state) {
  Rng rng(2);
  const RegressionModel model = RegressionModel::init(ModelKind::Mlp, 10, rng);
  const Matrix X = random_matrix(256, 10, rng);
  for (auto _ : state) {
    benchmark::DoNotOptimize(model.forward_batch(X));
  }
  state.SetItemsProcessed(state.iterations() * 256);
}
BENCHMARK(BM_mlp_forward);

void BM_mlp_backward(benchmark::State& state) {
  Rng rng(3);
  const RegressionModel model = RegressionModel::init(ModelKind::Mlp, 10, rng);
  const Matrix X = random_matrix(256, 10, rng);
  std::vector<double> upstream(256);
  for (double& u : upstream) u = rng.uniform(-1.0, 1.0);
  for (auto _ : state) {
    benchmark::DoNotOptimize(backward_batch(model, X, upstream));
  }
  state.SetItemsProcessed(state.iterations() * 256);
}
BENCHMARK(BM_mlp_backward);

void BM_candidate_weights(benchmark::State& state) {
  Rng rng(4);
  std::vector<double> losses(static_cast<std::size_t>(state.range(0)));
  for (double& l : losses) l = rng.uniform(0.01, 10.0);
  for (auto _ : state) {
    benchmark::DoNotOptimize(candidate_weights(losses, 0.5, 100.0));
  }
}
BENCHMARK(BM_candidate_weights)->Arg(3)->Arg(9)->Arg(17);

void BM_plr_loss(benchmark::State& state) {
  Rng rng(5);
  const Aggregation aggs[] = {Aggregation::avg_loss(), Aggregation::min_loss(),
                              Aggregation::weighted(0.5, 100.0)};
  const Aggregation agg = aggs[state.range(0)];
  std::vector<double> ys(5);
  for (double& y : ys) y = rng.uniform(-5.0, 5.0);
  const CandidateSet S(ys);
  for (auto _ : state) {
    benchmark::DoNotOptimize(plr_loss(agg, PointwiseLoss::mse(), 0.7, S));
  }
}
BENCHMARK(BM_plr_loss)->Arg(0)->Arg(1)->Arg(2);

void BM_corrupt(benchmark::State& state) {
  Rng rng(6);
  std::vector<double> labels(2507);
  for (double& y : labels) y = rng.uniform(1.0, 29.0);
  CorruptionConfig cfg;
  cfg.num_false = 4;
  cfg.span_lo = 1.0;
  cfg.span_hi = 29.0;
  const Rng stream(7);
  for (auto _ : state) {
    benchmark::DoNotOptimize(corrupt(labels, cfg, stream));
  }
  state.SetItemsProcessed(state.iterations() * labels.size());
}
BENCHMARK(BM_corrupt);

void BM_fit_epoch(benchmark::State& state) {
  Rng rng(8);
  const std::vector<double> w = {1.0, -2.0, 0.5, 3.0};
  const SynthData train = synth_linear(2507, w, 1.0, {-1.0, 1.0}, rng);
  const SynthData val = synth_linear(128, w, 1.0, {-1.0, 1.0}, rng);
  double lo = train.y[0];
  double hi = train.y[0];
  for (double y : train.y) {
    lo = std::min(lo, y);
    hi = std::max(hi, y);
  }
  CorruptionConfig cfg;
  cfg.num_false = 4;
  cfg.span_lo = lo;
  cfg.span_hi = hi;
  const PartialDataset tds{train.X, corrupt(train.y, cfg, Rng(9)), train.y, SplitTag::Train};
  const PartialDataset vds{val.X, corrupt(val.y, cfg, Rng(10)), val.y, SplitTag::Validation};
  TrainConfig c;
  c.model_kind = ModelKind::Mlp;
  c.aggregation = Aggregation::min_loss();
  c.learning_rate = 0.001;
  c.epochs = 1;
  c.seed = 11;
  for (auto _ : state) {
    benchmark::DoNotOptimize(fit(c, tds, vds));
  }
  state.SetItemsProcessed(state.iterations() * tds.size());
}
BENCHMARK(BM_fit_epoch);

}  // namespace

BENCHMARK_MAIN();
