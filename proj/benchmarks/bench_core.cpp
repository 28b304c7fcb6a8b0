#include <benchmark/benchmark.h>

#include "miprobe/cluster.hpp"
#include "miprobe/mi.hpp"
#include "miprobe/oracle.hpp"
#include "miprobe/probe.hpp"

namespace {

using namespace miprobe;

LabeledSample labeled(std::size_t frames, std::size_t symbols) {
  return sample_labeled(mixture_channel(symbols, 1.0), EmbeddingSpec::separable(symbols, 16, 1), frames, 2);
}

void BM_FitKMeans(benchmark::State& state) {
  const auto sample = labeled(static_cast<std::size_t>(state.range(0)), 10);
  const KMeansOptions opts{static_cast<std::size_t>(state.range(1)), 100, 0};
  for (auto _ : state) benchmark::DoNotOptimize(fit_kmeans(sample.features.values(), opts).inertia);
  state.SetItemsProcessed(state.iterations() * state.range(0));
}
BENCHMARK(BM_FitKMeans)->Args({10000, 10})->Args({10000, 50})->Args({50000, 50})->Unit(benchmark::kMillisecond);

void BM_TrainProbe(benchmark::State& state) {
  const auto sample = labeled(static_cast<std::size_t>(state.range(0)), 10);
  ProbeConfig cfg;
  cfg.kind = state.range(1) ? ProbeKind::kMlp : ProbeKind::kLogistic;
  cfg.epochs = 1;
  for (auto _ : state) {
    benchmark::DoNotOptimize(train_probe(sample.features.values(), sample.labels.ids, 10, cfg).final_train_ce_nats);
  }
  state.SetItemsProcessed(state.iterations() * state.range(0));
  state.SetLabel(to_string(cfg.kind) + ", one epoch");
}
BENCHMARK(BM_TrainProbe)->Args({50000, 0})->Args({50000, 1})->Unit(benchmark::kMillisecond);

void BM_PredictLogProbs(benchmark::State& state) {
  const auto sample = labeled(50000, 10);
  ProbeConfig cfg;
  cfg.kind = ProbeKind::kMlp;
  const auto model = init_probe(16, 10, cfg);
  for (auto _ : state) benchmark::DoNotOptimize(predict_log_probs(model, sample.features.values()).sum());
  state.SetItemsProcessed(state.iterations() * 50000);
}
BENCHMARK(BM_PredictLogProbs)->Unit(benchmark::kMillisecond);

}  // namespace

BENCHMARK_MAIN();
