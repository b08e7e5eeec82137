// Serial vs OpenMP kernels. Arg 0 runs the serial twin; otherwise the arg is the thread count.
#include <benchmark/benchmark.h>

#include <vector>

#include "otrates/kernels.hpp"
#include "otrates/measures.hpp"
#include "otrates/rates.hpp"

using namespace otrates;

namespace {

PointCloud cloud(int d, std::size_t n, std::uint64_t seed) {
  return sample(uniform_ball(Vec(d, 0.0), 1.0), n, seed).points;
}

void BM_cost_matrix(benchmark::State& st) {
  const int threads = static_cast<int>(st.range(0));
  const auto c = CostSpec::smooth_power(1.5, 1e-2, 5);
  const auto x = cloud(5, 1024, 1), y = cloud(5, 1024, 2);
  for (auto _ : st) {
    auto m = threads == 0 ? kernels::cost_matrix_serial(x, y, c) : kernels::cost_matrix(x, y, c, threads);
    benchmark::DoNotOptimize(m.data.data());
  }
  st.SetItemsProcessed(st.iterations() * 1024 * 1024);
}

void BM_min_plus(benchmark::State& st) {
  const int threads = static_cast<int>(st.range(0));
  const auto c = CostSpec::power_lr(2, 2, 5);
  const auto anchors = cloud(5, 2048, 3), queries = cloud(5, 2048, 4);
  std::vector<double> vals(2048, 0.1), out(2048);
  for (auto _ : st) {
    if (threads == 0)
      kernels::min_plus_serial(anchors, vals, c, queries, out);
    else
      kernels::min_plus(anchors, vals, c, queries, out, threads);
    benchmark::DoNotOptimize(out.data());
  }
}

void BM_estimate_delta(benchmark::State& st) {
  ExperimentConfig ex;
  ex.pair = ground_truth_location(uniform_ball(Vec(3, 0.0), 0.25), Vec(3, 0.2), CostSpec::power_lr(2, 2, 3));
  ex.n_grid = {64, 128};
  ex.reps = 8;
  ex.master_seed = 5;
  ex.threads = static_cast<int>(st.range(0));
  for (auto _ : st) {
    auto r = ex.threads == 0 ? estimate_delta_serial(ex) : estimate_delta(ex);
    benchmark::DoNotOptimize(r.per_n.data());
  }
}

}  // namespace

BENCHMARK(BM_cost_matrix)->Arg(0)->Arg(1)->Arg(2)->Arg(4)->UseRealTime()->Unit(benchmark::kMillisecond);
BENCHMARK(BM_min_plus)->Arg(0)->Arg(1)->Arg(2)->Arg(4)->UseRealTime()->Unit(benchmark::kMillisecond);
BENCHMARK(BM_estimate_delta)->Arg(0)->Arg(1)->Arg(4)->UseRealTime()->Unit(benchmark::kMillisecond);

BENCHMARK_MAIN();
