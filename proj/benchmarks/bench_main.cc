#include <benchmark/benchmark.h>

#include <numeric>

#include "warpguard/benchgen.h"
#include "warpguard/classifier.h"
#include "warpguard/fault_engine.h"
#include "warpguard/remapper.h"

namespace wg = warpguard;

namespace {

void BM_Execute(benchmark::State& state) {
  const wg::Fixture fx = wg::generate_fixture(*wg::find_fixture("hotspot"));
  const wg::Interpreter interp(fx.program);
  for (auto _ : state) benchmark::DoNotOptimize(interp.execute(fx.inputs));
  state.SetItemsProcessed(state.iterations() * static_cast<std::int64_t>(fx.flags.size()));
}
BENCHMARK(BM_Execute)->Unit(benchmark::kMillisecond);

void BM_Campaign(benchmark::State& state) {
  const wg::KernelProgram p = wg::parity_kernel(2, 64);
  const wg::Interpreter interp(p);
  const auto in = wg::parity_inputs(p);
  std::vector<std::uint32_t> threads(128);
  std::iota(threads.begin(), threads.end(), 0u);
  const auto sites = wg::enumerate_fault_space(interp, in, threads);
  wg::CampaignOptions o;
  o.workers = static_cast<unsigned>(state.range(0));
  for (auto _ : state) benchmark::DoNotOptimize(wg::run_campaign(interp, in, sites, o));
  state.SetItemsProcessed(state.iterations() * static_cast<std::int64_t>(sites.size()));
}
BENCHMARK(BM_Campaign)->Arg(1)->Arg(4)->UseRealTime()->Unit(benchmark::kMillisecond);

void BM_BuildPlan(benchmark::State& state) {
  const wg::Fixture fx = wg::generate_fixture(*wg::find_fixture("nearestneighbor"));
  for (auto _ : state) {
    benchmark::DoNotOptimize(wg::build_plan(fx.flags, fx.spec.num_ctas, fx.spec.cta_size));
  }
  state.SetItemsProcessed(state.iterations() * static_cast<std::int64_t>(fx.flags.size()));
}
BENCHMARK(BM_BuildPlan);

void BM_ClassifyWarps(benchmark::State& state) {
  const wg::Fixture fx = wg::generate_fixture(*wg::find_fixture("nearestneighbor"));
  const wg::LaunchLayout l = wg::LaunchLayout::linear(fx.spec.num_ctas, fx.spec.cta_size);
  for (auto _ : state) benchmark::DoNotOptimize(wg::classify_warps(fx.flags, l));
}
BENCHMARK(BM_ClassifyWarps);

}  // namespace

BENCHMARK_MAIN();
