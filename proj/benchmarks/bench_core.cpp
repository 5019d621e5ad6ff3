#include <benchmark/benchmark.h>

#include <cmath>
#include <random>
#include <vector>

#include "nelcorr/bell.hpp"
#include "nelcorr/correlators.hpp"
#include "nelcorr/nelson_sde.hpp"
#include "nelcorr/spectral.hpp"
#include "nelcorr/states.hpp"

using namespace nelcorr;

namespace {

CompositeState exchange() {
  const auto es = harmonic_eigensystem(1.0, 4, default_harmonic_grid(1.0));
  const double c = std::sqrt(0.5);
  return build_composite_state({es, es}, {{c, {0, 1}}, {c, {1, 0}}});
}

void BM_EigensolveHarmonic(benchmark::State& st) {
  const auto grid = Grid(-10.0, 10.0, static_cast<std::size_t>(st.range(0)));
  for (auto _ : st) benchmark::DoNotOptimize(solve_eigensystem(Potential::harmonic(1.0), grid, 4));
}
BENCHMARK(BM_EigensolveHarmonic)->Arg(500)->Arg(2000)->Unit(benchmark::kMillisecond);

void BM_QmSeries(benchmark::State& st) {
  const auto state = exchange();
  std::vector<double> lags(1000);
  for (std::size_t i = 0; i < lags.size(); ++i) lags[i] = 0.01 * static_cast<double>(i);
  for (auto _ : st) {
    benchmark::DoNotOptimize(qm_two_time_series(state, Observable::position(0), Observable::position(1), lags));
  }
}
BENCHMARK(BM_QmSeries)->Unit(benchmark::kMicrosecond);

void BM_NelsonExpansion(benchmark::State& st) {
  const auto state = exchange();
  for (auto _ : st) {
    benchmark::DoNotOptimize(nelson_mode_expansion(state, Observable::position(0), Observable::position(1)));
  }
}
BENCHMARK(BM_NelsonExpansion)->Unit(benchmark::kMillisecond);

void BM_NelsonCachedLookup(benchmark::State& st) {
  const auto state = exchange();
  ExpansionCache cache;
  cache.get(state, Observable::position(0), Observable::position(1));
  double t = 0.0;
  for (auto _ : st) {
    benchmark::DoNotOptimize(
        nelson_semigroup_correlation(state, Observable::position(0), Observable::position(1), t, &cache));
    t += 1e-3;
  }
}
BENCHMARK(BM_NelsonCachedLookup)->Unit(benchmark::kMicrosecond);

void BM_DriftEvaluation(benchmark::State& st) {
  const auto drift = regularized_drift(exchange(), 1e-3);
  std::mt19937_64 rng(1);
  std::normal_distribution<double> n(0.0, 1.0);
  std::vector<double> pts(2048);
  for (double& p : pts) p = n(rng);
  double out[2];
  std::size_t i = 0;
  for (auto _ : st) {
    drift.drift({&pts[i], 2}, out);
    benchmark::DoNotOptimize(out);
    i = (i + 2) % pts.size();
  }
}
BENCHMARK(BM_DriftEvaluation);

void BM_SimulateEnsemble(benchmark::State& st) {
  const auto state = exchange();
  const auto drift = regularized_drift(state, 1e-3);
  const auto init = sample_stationary(state, 1000, 3);
  for (auto _ : st) {
    benchmark::DoNotOptimize(simulate_ensemble(drift, init, {1e-3, 0.1, 0.1, 3, 1}, 1e-3));
  }
  st.SetItemsProcessed(st.iterations() * 1000 * 100);
}
BENCHMARK(BM_SimulateEnsemble)->Unit(benchmark::kMillisecond);

void BM_ClassicalRealizability(benchmark::State& st) {
  std::mt19937_64 rng(2);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  std::vector<Matrix2> es(256);
  for (auto& e : es) e = {{{u(rng), u(rng)}, {u(rng), u(rng)}}};
  std::size_t i = 0;
  for (auto _ : st) {
    benchmark::DoNotOptimize(classical_realizability(es[i], {}));
    i = (i + 1) % es.size();
  }
}
BENCHMARK(BM_ClassicalRealizability)->Unit(benchmark::kMicrosecond);

}  // namespace
BENCHMARK_MAIN();
