#include <benchmark/benchmark.h>

#include <vector>

#include "fwl/analysis.hpp"
#include "fwl/common.hpp"
#include "fwl/metrics.hpp"
#include "fwl/model.hpp"
#include "fwl/synth.hpp"
#include "fwl/train.hpp"

namespace {

using namespace fwl;

PlantedData make_workload(std::size_t n) {
    PlantedSpec spec;
    spec.cards = {50, 50, 50, 50, 50, 50, 50, 50};
    spec.rank = 4;
    spec.noise_rate = 0.1;
    spec.seed = 42;
    return generate_planted(spec, n);
}

void BM_Predict(benchmark::State& state) {
    const PlantedData w = make_workload(4096);
    std::size_t i = 0;
    for (auto _ : state) {
        benchmark::DoNotOptimize(w.model.predict(w.data.instances[i]));
        i = (i + 1) % w.data.n();
    }
}
BENCHMARK(BM_Predict);

void BM_LossGradients(benchmark::State& state) {
    const PlantedData w = make_workload(4096);
    const std::span<const EncodedInstance> batch(w.data.instances.data(),
                                                 static_cast<std::size_t>(state.range(0)));
    for (auto _ : state) benchmark::DoNotOptimize(loss_gradients(w.model, batch));
    state.SetItemsProcessed(state.iterations() * state.range(0));
}
BENCHMARK(BM_LossGradients)->Arg(256)->Arg(2048);

void BM_TrainStep(benchmark::State& state) {
    PlantedData w = make_workload(4096);
    AdagradState acc = AdagradState::like(w.model);
    const std::span<const EncodedInstance> batch(w.data.instances.data(), 2048);
    for (auto _ : state) {
        SparseGrad grads = loss_gradients(w.model, batch);
        adagrad_step(w.model, acc, grads, 0.1, 1e-6);
    }
    state.SetItemsProcessed(state.iterations() * 2048);
}
BENCHMARK(BM_TrainStep);

void BM_RegGradients(benchmark::State& state) {
    const PlantedData w = make_workload(16);
    for (auto _ : state) benchmark::DoNotOptimize(reg_gradients(w.model, 1e-6));
}
BENCHMARK(BM_RegGradients);

void BM_FieldNorms(benchmark::State& state) {
    const PlantedData w = make_workload(16);
    for (auto _ : state)
        for (int i = 0; i < w.model.fields(); ++i)
            benchmark::DoNotOptimize(field_norms(w.model, i));
}
BENCHMARK(BM_FieldNorms);

void BM_Auc(benchmark::State& state) {
    const auto n = static_cast<std::size_t>(state.range(0));
    Rng rng(9, 1);
    std::vector<double> scores(n);
    std::vector<std::int8_t> labels(n);
    for (std::size_t i = 0; i < n; ++i) {
        scores[i] = rng.uniform(-3, 3);
        labels[i] = rng.uniform() < 0.5 ? std::int8_t{1} : std::int8_t{-1};
    }
    for (auto _ : state) benchmark::DoNotOptimize(auc(scores, labels));
    state.SetItemsProcessed(state.iterations() * state.range(0));
}
BENCHMARK(BM_Auc)->Arg(10000)->Arg(100000);

}  // namespace

BENCHMARK_MAIN();
