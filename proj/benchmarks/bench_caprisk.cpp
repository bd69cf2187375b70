#include <benchmark/benchmark.h>

#include <cmath>
#include <vector>

#include "caprisk/distributions.hpp"
#include "caprisk/fitting.hpp"
#include "caprisk/numeric.hpp"
#include "caprisk/portfolio.hpp"
#include "caprisk/scenarios.hpp"

namespace {

using namespace caprisk;

void BM_CompoundPoissonGamma(benchmark::State& state) {
  const CompoundSpec spec{Poisson(5.0), Gamma(2.0, 3.0)};
  RandomStream s(1);
  for (auto _ : state) benchmark::DoNotOptimize(sample_compound(spec, s));
}
BENCHMARK(BM_CompoundPoissonGamma);

void BM_CompoundNbLogNormal(benchmark::State& state) {
  const CompoundSpec spec{NegBinomial(1.0, 0.07), LogNormal(-0.311, 1.5)};
  RandomStream s(1);
  for (auto _ : state) benchmark::DoNotOptimize(sample_compound(spec, s));
}
BENCHMARK(BM_CompoundNbLogNormal);

// One replication of a 10,000-user portfolio.
void BM_Replication(benchmark::State& state) {
  const char* names[] = {"baseline-pg", "baseline-nbln", "stress-p0", "mixed-m1"};
  const Scenario s = builtin(names[state.range(0)]);
  std::uint64_t rep = 0;
  for (auto _ : state) benchmark::DoNotOptimize(simulate_replication(s, rep++));
  state.SetLabel(names[state.range(0)]);
}
BENCHMARK(BM_Replication)->DenseRange(0, 3)->Unit(benchmark::kMillisecond);

void BM_TobitFit(benchmark::State& state) {
  const auto n = static_cast<std::size_t>(state.range(0));
  const double threshold = std::exp(2.6 + 1.3 * normal_quantile(0.8));
  RandomStream s(7);
  std::vector<CensoredSample> sample(n);
  for (auto& o : sample) {
    const double v = std::exp(2.6 + 1.3 * s.normal());
    o = v >= threshold ? CensoredSample{threshold, true} : CensoredSample{v, false};
  }
  for (auto _ : state) benchmark::DoNotOptimize(mle_lognormal_censored(sample));
  state.SetItemsProcessed(state.iterations() * static_cast<std::int64_t>(n));
}
BENCHMARK(BM_TobitFit)->Arg(1000)->Arg(50000)->Unit(benchmark::kMillisecond);

}  // namespace

BENCHMARK_MAIN();
