#include "gridtrade/grid/topology.hpp"
#include "gridtrade/market/negotiation.hpp"
#include "gridtrade/sim/simulation.hpp"

#include <benchmark/benchmark.h>

#include <numeric>

using namespace gridtrade;

namespace {

market::MarketInstance case33(double omega) {
  auto s = sim::bundled_scenario("case33");
  s.omega = omega;
  s.groups = 1;
  return sim::build_instance(s);
}

// A long feeder with side branches, enough buses to make the matrix non-trivial.
grid::NetworkTopology feeder(int n) {
  std::vector<grid::BusId> buses(static_cast<std::size_t>(n));
  std::iota(buses.begin(), buses.end(), 1);
  std::vector<grid::Line> lines;
  for (int b = 2; b <= n; ++b)
    lines.push_back({b - 1, b % 5 == 0 ? b / 2 : b - 1, b, 0.5 + (b % 7) * 0.1});
  return grid::NetworkTopology(buses, lines, 1);
}

void negotiate(benchmark::State& state, Execution exec) {
  auto m = case33(static_cast<double>(state.range(0)));
  market::SolverConfig cfg;
  cfg.execution = exec;
  std::size_t iterations = 0;
  for (auto _ : state) {
    auto s = market::negotiate(m, cfg);
    iterations = s.iterations;
    benchmark::DoNotOptimize(s.trades.data());
  }
  state.counters["iterations"] = static_cast<double>(iterations);
}

void distances(benchmark::State& state, Execution exec) {
  auto topo = feeder(static_cast<int>(state.range(0)));
  std::vector<grid::BusId> ids = topo.buses();
  for (auto _ : state) {
    auto d = grid::distance_matrix(topo, ids, ids, exec);
    benchmark::DoNotOptimize(d.data());
  }
}

void sweep(benchmark::State& state, Execution exec) {
  auto s = sim::bundled_scenario("case33");
  for (auto _ : state) {
    auto runs = sim::run_sweep(s, {0, 1, 2, 4}, exec);
    benchmark::DoNotOptimize(runs.data());
  }
}

} // namespace

BENCHMARK_CAPTURE(negotiate, serial, Execution::Serial)->Arg(0)->Arg(2)->Unit(benchmark::kMillisecond);
BENCHMARK_CAPTURE(negotiate, openmp, Execution::Parallel)->Arg(0)->Arg(2)->Unit(benchmark::kMillisecond);
BENCHMARK_CAPTURE(distances, serial, Execution::Serial)->Arg(200)->Arg(1000)->Unit(benchmark::kMillisecond);
BENCHMARK_CAPTURE(distances, openmp, Execution::Parallel)->Arg(200)->Arg(1000)->Unit(benchmark::kMillisecond);
BENCHMARK_CAPTURE(sweep, serial, Execution::Serial)->Unit(benchmark::kMillisecond);
BENCHMARK_CAPTURE(sweep, openmp, Execution::Parallel)->Unit(benchmark::kMillisecond);

BENCHMARK_MAIN();
