#include <benchmark/benchmark.h>

#include <memory>

#include "mxd/design.hpp"
#include "mxd/risk.hpp"
#include "mxd/rng.hpp"
#include "mxd/simulate.hpp"
#include "mxd/wls.hpp"

namespace {

std::shared_ptr<const mxd::BasisContext> ctx_k(int deg) {
    return std::make_shared<const mxd::BasisContext>(mxd::build_basis_context(deg));
}

void BM_BuildMinimaxDesign(benchmark::State& state) {
    const auto ctx = ctx_k(static_cast<int>(state.range(0)));
    for (auto _ : state) {
        auto d = mxd::build_design(ctx, mxd::DesignFamily::Minimax, 2.0);
        benchmark::DoNotOptimize(d);
    }
}
BENCHMARK(BM_BuildMinimaxDesign)->Arg(1)->Arg(2)->Arg(3);

void BM_QuantileSampling(benchmark::State& state) {
    const auto ctx = ctx_k(1);
    const auto d = mxd::build_design(ctx, mxd::DesignFamily::Minimax, 2.0);
    mxd::RngStream stream(1, 0);
    for (auto _ : state) {
        auto batch = mxd::sample_predictors(d, static_cast<int>(state.range(0)), stream);
        benchmark::DoNotOptimize(batch.xs);
    }
    state.SetItemsProcessed(state.iterations() * state.range(0));
}
BENCHMARK(BM_QuantileSampling)->Arg(1000)->Arg(100000);

void BM_FitWls(benchmark::State& state) {
    const auto ctx = ctx_k(1);
    const auto d = mxd::build_design(ctx, mxd::DesignFamily::SqrtH);
    const auto m = mxd::calibrate_leading_coefficient({0.0, 1.0}, 2, *ctx, 1.0);
    mxd::RngStream stream(1, 0);
    auto batch = mxd::sample_predictors(d, static_cast<int>(state.range(0)), stream);
    mxd::Dataset data;
    data.xs = batch.xs;
    data.ys = mxd::simulate_responses(data.xs, m, 1.0, stream);
    for (auto _ : state) {
        auto fit = mxd::fit_wls(data, d, *ctx);
        benchmark::DoNotOptimize(fit.beta);
    }
    state.SetItemsProcessed(state.iterations() * state.range(0));
}
BENCHMARK(BM_FitWls)->Arg(50)->Arg(5000);

void BM_OmegaTrace(benchmark::State& state) {
    const auto ctx = ctx_k(2);
    const auto d = mxd::build_design(ctx, mxd::DesignFamily::Minimax, 2.0);
    const auto m = mxd::calibrate_leading_coefficient({0.0, 1.0, 0.5}, 3, *ctx, 1.0);
    for (auto _ : state) {
        auto r = mxd::omega_trace(*ctx, d, m, 1.0);
        benchmark::DoNotOptimize(r.trace_risk);
    }
}
BENCHMARK(BM_OmegaTrace);

void BM_RunExperiment(benchmark::State& state) {
    mxd::SimConfig cfg;
    cfg.ctx = ctx_k(1);
    cfg.designs.push_back(mxd::build_design(cfg.ctx, mxd::DesignFamily::Uniform));
    cfg.designs.push_back(mxd::build_design(cfg.ctx, mxd::DesignFamily::Minimax, 1.0));
    cfg.design_labels = {"uniform", "minimax"};
    cfg.mean = mxd::calibrate_leading_coefficient({0.0, 1.0}, 2, *cfg.ctx, 1.0);
    cfg.n = 50;
    cfg.replications = static_cast<int>(state.range(0));
    cfg.seed = 1;
    for (auto _ : state) {
        auto res = mxd::run_experiment(cfg);
        benchmark::DoNotOptimize(res.means);
    }
    state.SetItemsProcessed(state.iterations() * state.range(0));
}
BENCHMARK(BM_RunExperiment)->Arg(1000)->Unit(benchmark::kMillisecond);

}  // namespace

BENCHMARK_MAIN();
