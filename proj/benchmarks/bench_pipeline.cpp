#include <benchmark/benchmark.h>

#include "tmsc/loss.hpp"
#include "tmsc/patch_select.hpp"
#include "tmsc/pipeline.hpp"
#include "tmsc/rng.hpp"
#include "tmsc/rollout.hpp"
#include "tmsc/synth.hpp"
#include "tmsc/tensor.hpp"

namespace {

tmsc::Tensor random_matrix(tmsc::Rng& rng, int rows, int cols, bool grad = false) {
    std::vector<float> data(static_cast<size_t>(rows) * cols);
    for (auto& v : data) v = static_cast<float>(rng.normal());
    return tmsc::Tensor::from_data({rows, cols}, std::move(data), grad);
}

tmsc::RunConfig bench_config() {
    tmsc::RunConfig cfg;
    cfg.synth.n_samples = 16;
    cfg.synth.seed = 5;
    cfg.seed = 5;
    return cfg;
}

void BM_MatmulForwardBackward(benchmark::State& state) {
    const int n = static_cast<int>(state.range(0));
    tmsc::Rng rng(1);
    tmsc::Tensor a = random_matrix(rng, n, n, true);
    tmsc::Tensor b = random_matrix(rng, n, n, true);
    for (auto _ : state) {
        tmsc::Tensor loss = tmsc::sum(tmsc::matmul(a, b));
        loss.backward();
        a.zero_grad();
        b.zero_grad();
        benchmark::DoNotOptimize(loss.value());
    }
}
BENCHMARK(BM_MatmulForwardBackward)->Arg(16)->Arg(64);

void BM_AttentionRollout(benchmark::State& state) {
    const int tokens = static_cast<int>(state.range(0));
    tmsc::Rng rng(2);
    tmsc::AttentionStack stack;
    stack.tokens = tokens;
    for (int l = 0; l < 4; ++l) {
        std::vector<float> layer(static_cast<size_t>(tokens) * tokens);
        for (int r = 0; r < tokens; ++r) {
            double total = 0.0;
            for (int c = 0; c < tokens; ++c) {
                layer[static_cast<size_t>(r) * tokens + c] = static_cast<float>(rng.uniform());
                total += layer[static_cast<size_t>(r) * tokens + c];
            }
            for (int c = 0; c < tokens; ++c) {
                layer[static_cast<size_t>(r) * tokens + c] /= static_cast<float>(total);
            }
        }
        stack.layers.push_back(std::move(layer));
    }
    for (auto _ : state) {
        benchmark::DoNotOptimize(tmsc::compute_rollout(stack));
    }
}
BENCHMARK(BM_AttentionRollout)->Arg(37)->Arg(145);

void BM_NmsPatchSelect(benchmark::State& state) {
    tmsc::Rng rng(3);
    std::vector<float> grid(144);
    for (auto& v : grid) v = static_cast<float>(rng.uniform());
    for (auto _ : state) {
        benchmark::DoNotOptimize(tmsc::nms_patch_select(grid, 12, 10));
    }
}
BENCHMARK(BM_NmsPatchSelect);

void BM_ForwardPass(benchmark::State& state) {
    tmsc::RunConfig cfg = bench_config();
    tmsc::ModelBundle model = tmsc::init_model(cfg);
    auto samples = tmsc::generate_dataset(cfg.synth);
    size_t i = 0;
    for (auto _ : state) {
        benchmark::DoNotOptimize(tmsc::forward(samples[i % samples.size()], model));
        ++i;
    }
}
BENCHMARK(BM_ForwardPass);

void BM_TrainStep(benchmark::State& state) {
    tmsc::RunConfig cfg = bench_config();
    tmsc::ModelBundle model = tmsc::init_model(cfg);
    auto params = model.parameters();
    auto samples = tmsc::generate_dataset(cfg.synth);
    const auto options = tmsc::options_for(model);
    size_t i = 0;
    for (auto _ : state) {
        const tmsc::Sample& s = samples[i % samples.size()];
        auto trace = tmsc::run_forward(s, model, options);
        auto loss = tmsc::total_loss(trace.alpha_fused, trace.alpha_low, trace.alpha_high,
                                     s.one_hot, 1.0);
        loss.loss.backward();
        tmsc::sgd_step(params, cfg.lr);
        ++i;
    }
}
BENCHMARK(BM_TrainStep);

}  // namespace

BENCHMARK_MAIN();
