#include "mlms/anc.hpp"
#include "mlms/filters.hpp"
#include "mlms/theory.hpp"

#include <benchmark/benchmark.h>

using namespace mlms;

namespace {

Execution exec_of(const benchmark::State& state)
{
    return state.range(0) == 0 ? Execution::serial : Execution::parallel;
}

void BM_FilterStep(benchmark::State& state)
{
    const auto m = static_cast<std::size_t>(state.range(0));
    filters::AdaptiveFilter f(filters::FilterConfig::mlms(m, 0.35, 1e-3, 0.1));
    Rng rng(1);
    filters::Vector phi(static_cast<Eigen::Index>(m));
    for (auto& x : phi) x = rng.normal();
    for (auto _ : state) {
        const auto out = f.step(phi, rng.normal());
        benchmark::DoNotOptimize(out);
    }
    state.SetItemsProcessed(state.iterations());
}
BENCHMARK(BM_FilterStep)->Arg(6)->Arg(50);

void BM_RlsStep(benchmark::State& state)
{
    const auto m = static_cast<std::size_t>(state.range(0));
    filters::AdaptiveFilter f(filters::FilterConfig::rls(m, 0.999, 1e-2));
    Rng rng(2);
    filters::Vector phi(static_cast<Eigen::Index>(m));
    for (auto _ : state) {
        for (auto& x : phi) x = rng.normal();
        benchmark::DoNotOptimize(f.step(phi, rng.normal()));
    }
}
BENCHMARK(BM_RlsStep)->Arg(6)->Arg(50);

void BM_ProductNormProbe(benchmark::State& state)
{
    theory::ProbeSpec spec;
    spec.regressors.kind = systems::RegressorKind::cycling_basis;
    spec.regressors.dim = 3;
    spec.regressors.random_phase = true;
    spec.h = 3;
    spec.alpha_hat = 0.5;
    spec.mu = theory::mu_max(0.5, 3, 1, 2.0);
    spec.beta = spec.mu * spec.mu;
    spec.trials = 200;
    spec.max_blocks = 30;
    for (auto _ : state) benchmark::DoNotOptimize(theory::product_norm_probe(spec, exec_of(state)));
}
BENCHMARK(BM_ProductNormProbe)->Arg(0)->Arg(1)->ArgName("parallel")->Unit(benchmark::kMillisecond)->UseRealTime();

void BM_BetaSweep(benchmark::State& state)
{
    anc::SyntheticSceneSpec spec;
    spec.n_samples = 8000;
    std::vector<anc::AncScene> scenes;
    for (std::uint64_t i = 0; i < 8; ++i) scenes.push_back(anc::make_synthetic_scene(spec, 0.0, i));
    const auto base = filters::FilterConfig::mlms(50, 0.35, 1e-12, 0.0);
    const std::vector<double> betas{0.0, 0.1, 0.2, 0.3};
    for (auto _ : state)
        benchmark::DoNotOptimize(
            anc::sweep_beta(base, scenes, betas, 50, anc::Topology::clean_reference, exec_of(state)));
}
BENCHMARK(BM_BetaSweep)->Arg(0)->Arg(1)->ArgName("parallel")->Unit(benchmark::kMillisecond)->UseRealTime();

} // namespace

BENCHMARK_MAIN();
