#include <benchmark/benchmark.h>

#include "glasslab/cascade.hpp"
#include "glasslab/gibbs.hpp"
#include "glasslab/identities.hpp"
#include "glasslab/point_process.hpp"
#include "glasslab/sources.hpp"

namespace {

using namespace glasslab;

void BM_PoissonProcess(benchmark::State& state) {
  Rng rng(42);
  for (auto _ : state) {
    benchmark::DoNotOptimize(sample_poisson_process(0.5, static_cast<int>(state.range(0)), rng));
  }
}
BENCHMARK(BM_PoissonProcess)->Arg(64)->Arg(256);

void BM_BuildCascade(benchmark::State& state) {
  CascadeParams params;
  params.r = 2;
  params.zetas = {0.3, 0.6};
  params.d = static_cast<int>(state.range(0));
  Rng rng(42);
  for (auto _ : state) {
    benchmark::DoNotOptimize(build_cascade(params, rng));
  }
}
BENCHMARK(BM_BuildCascade)->Arg(25)->Arg(50)->Arg(100);

void BM_ReplicaGroup(benchmark::State& state) {
  CascadeParams params;
  params.r = 2;
  params.zetas = {0.3, 0.6};
  params.d = 50;
  CascadeMeasureModel model(params, HierarchicalKernel::balanced(2, 1.0));
  Rng rng(42);
  model.sample_measure(rng);
  ReplicaGroup group;
  for (auto _ : state) {
    model.draw_group(5, 16, rng, group);
    benchmark::DoNotOptimize(group);
  }
}
BENCHMARK(BM_ReplicaGroup);

void BM_PerturbationField(benchmark::State& state) {
  const int n = static_cast<int>(state.range(0));
  PerturbationParams params = PerturbationParams::uniform_x(8, 1.5, 1.0);
  Rng rng(42);
  for (auto _ : state) {
    benchmark::DoNotOptimize(PerturbationField::build(n, params, rng));
  }
}
BENCHMARK(BM_PerturbationField)->Arg(12)->Arg(16);

void BM_EnumerateKsat(benchmark::State& state) {
  const int n = static_cast<int>(state.range(0));
  Rng rng(42);
  GibbsEnsemble ensemble = make_ksat_ensemble(KSatInstance::sample(n, 2, 1.0, rng), 1.0);
  for (auto _ : state) {
    benchmark::DoNotOptimize(enumerate_gibbs(ensemble));
  }
}
BENCHMARK(BM_EnumerateKsat)->Arg(12)->Arg(16);

void BM_MetropolisSweeps(benchmark::State& state) {
  Rng rng(42);
  GibbsEnsemble ensemble = make_ksat_ensemble(KSatInstance::sample(64, 2, 1.0, rng), 1.0);
  McmcOptions opt;
  opt.burnin_sweeps = 0;
  for (auto _ : state) {
    benchmark::DoNotOptimize(metropolis_replicas(ensemble, 1, 100, rng, opt));
  }
}
BENCHMARK(BM_MetropolisSweeps);

}  // namespace

BENCHMARK_MAIN();
