// Microbenchmarks for the hot paths: single values, table builds, full
// distribution evaluations, simulator realizations, and the optimizers.
#include <benchmark/benchmark.h>

#include <hetcoop/analytic.hpp>
#include <hetcoop/mcsim.hpp>
#include <hetcoop/optimizer.hpp>
#include <hetcoop/policies.hpp>

#include <cmath>
#include <numbers>

using namespace hetcoop;

namespace {

NetworkConfig demo_config() {
  NetworkConfig c;
  c.sbs.density = 1.0 / (50.0 * 50.0 * std::numbers::pi);
  c.sbs.power = std::pow(10.0, -0.7);
  c.sbs.pathloss_exponent = 4.0;
  c.sbs.bandwidth = 20e6;
  c.mbs.density = 1.0 / (500.0 * 500.0 * std::numbers::pi);
  c.mbs.power = std::pow(10.0, 1.3);
  c.mbs.pathloss_exponent = 4.0;
  c.mbs.bandwidth = 0.2e6;
  c.target_rate = 1e6;
  return c;
}

CachingDistribution mpc_dist(int files, int cache) {
  return baseline_distribution(BaselineKind::most_popular, zipf(files, 0.8), cache);
}

void BM_PsiS1Closed(benchmark::State& state) {
  const NetworkConfig cfg = demo_config();
  const int k = static_cast<int>(state.range(0));
  for (auto _ : state) benchmark::DoNotOptimize(psi_s1(cfg, k, 0.35));
}
BENCHMARK(BM_PsiS1Closed)->Arg(1)->Arg(3);

void BM_PsiS1Integral(benchmark::State& state) {
  const NetworkConfig cfg = demo_config();
  const int k = static_cast<int>(state.range(0));
  for (auto _ : state)
    benchmark::DoNotOptimize(psi_s1(cfg, k, 0.35, {}, FormulaPath::integral_only));
}
BENCHMARK(BM_PsiS1Integral)->Arg(1)->Arg(2)->Arg(3);

void BM_BuildStpTables(benchmark::State& state) {
  const NetworkConfig cfg = demo_config();
  const int k = static_cast<int>(state.range(0));
  for (auto _ : state) benchmark::DoNotOptimize(build_stp_tables(cfg, k));
}
BENCHMARK(BM_BuildStpTables)->Arg(1)->Arg(3);

void BM_StpScheme1FullCatalog(benchmark::State& state) {
  const NetworkConfig cfg = demo_config();
  const Popularity pop = zipf(100, 0.8);
  const CachingDistribution dist = baseline_distribution(BaselineKind::iid_popular, pop, 25);
  const int k = static_cast<int>(state.range(0));
  for (auto _ : state) benchmark::DoNotOptimize(stp_scheme1(cfg, pop, dist, k));
}
BENCHMARK(BM_StpScheme1FullCatalog)->Arg(1)->Arg(2);

void BM_StpScheme2FullCatalog(benchmark::State& state) {
  const NetworkConfig cfg = demo_config();
  const Popularity pop = zipf(100, 0.8);
  const CachingDistribution dist = baseline_distribution(BaselineKind::iid_popular, pop, 25);
  for (auto _ : state) benchmark::DoNotOptimize(stp_scheme2(cfg, pop, dist, 3));
}
BENCHMARK(BM_StpScheme2FullCatalog);

void BM_SimRealizations(benchmark::State& state) {
  const NetworkConfig cfg = demo_config();
  const Popularity pop = zipf(10, 0.8);
  const CachingDistribution dist = mpc_dist(10, 2);
  SimParams sim;
  sim.realizations = 32;
  const Scheme scheme = state.range(0) == 1 ? Scheme::scheme1 : Scheme::scheme2;
  for (auto _ : state) benchmark::DoNotOptimize(estimate_stp(cfg, pop, dist, 2, scheme, sim));
  state.SetItemsProcessed(state.iterations() * sim.realizations);
}
BENCHMARK(BM_SimRealizations)->Arg(1)->Arg(2);

void BM_ProjectCappedSimplex(benchmark::State& state) {
  std::vector<double> v(100);
  for (size_t i = 0; i < v.size(); ++i) v[i] = std::sin(0.37 * static_cast<double>(i)) + 0.5;
  for (auto _ : state) benchmark::DoNotOptimize(project_capped_simplex(v, 25.0, 0.0, 1.0));
}
BENCHMARK(BM_ProjectCappedSimplex);

void BM_WaterfillClosedForm(benchmark::State& state) {
  const NetworkConfig cfg = demo_config();
  const WaterfillConstants consts = waterfill_constants(cfg);
  const Popularity pop = zipf(100, 0.8);
  const double floor = find_t_th(cfg, 1);
  for (auto _ : state)
    benchmark::DoNotOptimize(waterfill_closed_form(pop.probabilities, consts, floor, 25));
}
BENCHMARK(BM_WaterfillClosedForm);

void BM_OptimizeScheme1WaterfillPath(benchmark::State& state) {
  const NetworkConfig cfg = demo_config();
  const Popularity pop = zipf(100, 0.8);
  for (auto _ : state)
    benchmark::DoNotOptimize(optimize_scheme1(cfg, pop, 25, 1, Scheme1Path::closed_form));
}
BENCHMARK(BM_OptimizeScheme1WaterfillPath);

void BM_OptimizeScheme2(benchmark::State& state) {
  const NetworkConfig cfg = demo_config();
  const Popularity pop = zipf(100, 0.8);
  const int k = static_cast<int>(state.range(0));
  for (auto _ : state) benchmark::DoNotOptimize(optimize_scheme2(cfg, pop, 25, k));
}
BENCHMARK(BM_OptimizeScheme2)->Arg(1)->Arg(3);

}  // namespace

BENCHMARK_MAIN();
