// SPDX-License-Identifier: Apache-2.0
#include <benchmark/benchmark.h>

#include "tca/attention_oracle.hpp"
#include "tca/calibration.hpp"
#include "tca/engine.hpp"
#include "tca/session.hpp"
#include "tca/workload.hpp"

namespace {

tca::AttentionInputs sink_workload(std::size_t length) {
    return tca::generate_pattern({tca::PatternFamily::attention_sink, length, 64, tca::Seed{1}, 0.9});
}

void BM_FullAttention(benchmark::State& state) {
    const auto inp = sink_workload(static_cast<std::size_t>(state.range(0)));
    for (auto _ : state) benchmark::DoNotOptimize(tca::full_attention(inp, tca::Causal::on));
    state.SetComplexityN(state.range(0));
}
BENCHMARK(BM_FullAttention)->RangeMultiplier(2)->Range(512, 4096)->Unit(benchmark::kMillisecond);

void BM_SparsePrefill(benchmark::State& state) {
    const auto inp = sink_workload(static_cast<std::size_t>(state.range(0)));
    const auto cfg = tca::make_config(64, 1.0, 1.0);
    const tca::SelectionParams params{64, 256, 0.5, tca::RedundancyIndex::hhi};
    for (auto _ : state) benchmark::DoNotOptimize(tca::prefill(inp, cfg, params));
    state.SetComplexityN(state.range(0));
}
BENCHMARK(BM_SparsePrefill)->RangeMultiplier(2)->Range(512, 4096)->Unit(benchmark::kMillisecond);

void BM_SelectCoreTokens(benchmark::State& state) {
    const auto inp = sink_workload(static_cast<std::size_t>(state.range(0)));
    const auto cfg = tca::make_config(64, 1.0, 1.0);
    const tca::SelectionParams params{64, 256, 0.5, tca::RedundancyIndex::hhi};
    for (auto _ : state) benchmark::DoNotOptimize(tca::select_core_tokens(inp, cfg, params));
}
BENCHMARK(BM_SelectCoreTokens)->RangeMultiplier(4)->Range(1024, 16384)->Unit(benchmark::kMicrosecond);

void BM_CalibrateHead(benchmark::State& state) {
    const tca::CalibrationSample sample{sink_workload(static_cast<std::size_t>(state.range(0))), "sink"};
    const auto cands = tca::generate_candidates(32, 8, 1.0);
    tca::CalibrationParams params;
    params.selection = {32, 256, 0.5, tca::RedundancyIndex::hhi};
    for (auto _ : state) benchmark::DoNotOptimize(tca::calibrate_head(sample, cands, params));
}
BENCHMARK(BM_CalibrateHead)->Arg(1024)->Arg(2048)->Unit(benchmark::kMillisecond);

void BM_DecodeStep(benchmark::State& state) {
    const std::size_t d = 64;
    const auto inp = sink_workload(4096);
    auto pre = tca::prefill(inp, tca::make_config(64, 2.0, 1.0), {64, 512, 0.5, tca::RedundancyIndex::hhi});
    tca::SyntheticQkvSource source(tca::Seed{2}, 0, d);
    std::size_t pos = pre.cache.next_position();
    for (auto _ : state) {
        const auto tok = source.next();
        benchmark::DoNotOptimize(pre.cache.step(tok.q, tok.k, tok.v, pos++));
    }
    state.counters["cache"] = static_cast<double>(pre.cache.size());
}
BENCHMARK(BM_DecodeStep)->Iterations(2000);

}  // namespace
BENCHMARK_MAIN();
