#include <benchmark/benchmark.h>

#include <vector>

#include "triattn/cache.hpp"
#include "triattn/rng.hpp"
#include "triattn/rope.hpp"
#include "triattn/scoring.hpp"
#include "triattn/stats.hpp"
#include "triattn/synth.hpp"

using namespace triattn;

namespace {

QkTrace make_trace(std::size_t tokens, std::size_t head_dim) {
    const auto spec = SynthHeadSpec::uniform(head_dim, 8.0, 0.2, 1234);
    return generate_trace(spec, tokens, 1, 1);
}

void bm_logit_exact(benchmark::State & state) {
    const std::size_t d = std::size_t(state.range(0));
    const auto spec = make_frequency_spec(d);
    SplitMixStream rng(1);
    HeadVector q, k;
    q.bands.resize(d / 2);
    k.bands.resize(d / 2);
    for (std::size_t f = 0; f < d / 2; ++f) {
        q.bands[f] = {rng.uniform(), rng.uniform()};
        k.bands[f] = {rng.uniform(), rng.uniform()};
    }
    for (auto _ : state) {
        benchmark::DoNotOptimize(logit_exact(q, 4096, k, 17, spec));
    }
}
BENCHMARK(bm_logit_exact)->Arg(32)->Arg(64)->Arg(128);

void bm_score_averaged(benchmark::State & state) {
    const std::size_t d = std::size_t(state.range(0));
    const auto trace = make_trace(2048, d);
    const auto calib = calibrate(trace, make_frequency_spec(d));
    const auto offsets = make_geometric_offsets();
    const auto key = KeyRecord::make(trace.k_vector(100, 0), 100);
    for (auto _ : state) {
        benchmark::DoNotOptimize(
            score_averaged(key, 2047, calib.heads[0], calib.spec, offsets));
    }
}
BENCHMARK(bm_score_averaged)->Arg(32)->Arg(64)->Arg(128);

void bm_calibrate(benchmark::State & state) {
    const auto trace = make_trace(std::size_t(state.range(0)), 64);
    const auto spec = make_frequency_spec(64);
    for (auto _ : state) {
        benchmark::DoNotOptimize(calibrate(trace, spec));
    }
    state.SetItemsProcessed(state.iterations() * state.range(0));
}
BENCHMARK(bm_calibrate)->Arg(4096)->Arg(32768);

void bm_simulate_decode(benchmark::State & state) {
    const auto trace = make_trace(std::size_t(state.range(0)), 64);
    const auto calib = calibrate(trace, make_frequency_spec(64));
    PruneConfig config;
    config.budget = 512;
    config.window = 128;
    config.offsets = make_geometric_offsets(1, 1024);
    for (auto _ : state) {
        benchmark::DoNotOptimize(simulate_decode(trace, calib, config));
    }
    state.SetItemsProcessed(state.iterations() * state.range(0));
}
BENCHMARK(bm_simulate_decode)->Arg(2048)->Arg(8192);

} // namespace

BENCHMARK_MAIN();
