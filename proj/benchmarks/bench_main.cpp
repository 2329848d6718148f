#include <benchmark/benchmark.h>

#include <cstdint>
#include <vector>

#include "kgraph/kde.hpp"
#include "kgraph/kernels.hpp"
#include "kgraph/rng.hpp"
#include "kgraph/sampling.hpp"
#include "kgraph/sparsify.hpp"

namespace {

using namespace kgraph;

Dataset make_cloud(std::size_t n, std::size_t d, std::uint64_t seed) {
  RngStream rng(seed);
  std::vector<double> coords(n * d);
  for (double& c : coords) c = rng.gaussian();
  return Dataset(std::move(coords), n, d);
}

const KernelSpec kSpec{KernelFamily::gaussian, 3.0, 1.0, 0.3};

void bm_kde_exact_query(benchmark::State& state) {
  auto n = static_cast<std::size_t>(state.range(0));
  Dataset data = make_cloud(n, 3, 1);
  auto oracle = build_exact_oracle(data, kSpec);
  RngStream rng(2);
  std::size_t i = 0;
  for (auto _ : state) {
    benchmark::DoNotOptimize(oracle->query(data.point(i), rng).value);
    i = (i + 1) % n;
  }
}
BENCHMARK(bm_kde_exact_query)->Arg(256)->Arg(1024)->Arg(4096);

void bm_kde_sampling_query(benchmark::State& state) {
  auto n = static_cast<std::size_t>(state.range(0));
  Dataset data = make_cloud(n, 3, 1);
  auto oracle = build_sampling_oracle(data, kSpec, 0.25, 0.1);
  RngStream rng(3);
  std::size_t i = 0;
  for (auto _ : state) {
    benchmark::DoNotOptimize(oracle->query(data.point(i), rng).value);
    i = (i + 1) % n;
  }
}
BENCHMARK(bm_kde_sampling_query)->Arg(1024)->Arg(4096)->Arg(16384);

void bm_degree_table(benchmark::State& state) {
  auto n = static_cast<std::size_t>(state.range(0));
  Dataset data = make_cloud(n, 3, 4);
  auto tree = build_multilevel(data, kSpec);
  for (auto _ : state) {
    RngStream rng(5);
    benchmark::DoNotOptimize(approx_degrees(tree, 0.0, rng).total());
  }
}
BENCHMARK(bm_degree_table)->Arg(256)->Arg(1024);

void bm_neighbor_descent(benchmark::State& state) {
  auto n = static_cast<std::size_t>(state.range(0));
  Dataset data = make_cloud(n, 3, 6);
  MultiLevelOptions opts;
  opts.memoize = true;
  auto tree = build_multilevel(data, kSpec, opts);
  RngStream rng(7);
  std::size_t v = 0;
  for (auto _ : state) {
    benchmark::DoNotOptimize(sample_neighbor(tree, v, rng).index);
    v = (v + 1) % n;
  }
}
BENCHMARK(bm_neighbor_descent)->Arg(256)->Arg(1024)->Arg(4096);

void bm_neighbor_rejection(benchmark::State& state) {
  auto n = static_cast<std::size_t>(state.range(0));
  Dataset data = make_cloud(n, 3, 8);
  MultiLevelOptions opts;
  opts.memoize = true;
  auto tree = build_multilevel(data, kSpec, opts);
  RngStream rng(9);
  auto table = approx_degrees(tree, 0.0, rng);
  std::size_t v = 0;
  for (auto _ : state) {
    benchmark::DoNotOptimize(sample_neighbor_exact(tree, table, v, rng).index);
    v = (v + 1) % n;
  }
}
BENCHMARK(bm_neighbor_rejection)->Arg(256)->Arg(1024)->Arg(4096);

void bm_edge_sample(benchmark::State& state) {
  auto n = static_cast<std::size_t>(state.range(0));
  Dataset data = make_cloud(n, 3, 10);
  MultiLevelOptions opts;
  opts.memoize = true;
  auto tree = build_multilevel(data, kSpec, opts);
  RngStream rng(11);
  auto table = approx_degrees(tree, 0.0, rng);
  for (auto _ : state) {
    benchmark::DoNotOptimize(sample_edge(table, tree, rng).u);
  }
}
BENCHMARK(bm_edge_sample)->Arg(256)->Arg(1024)->Arg(4096);

void bm_walk_step(benchmark::State& state) {
  auto n = static_cast<std::size_t>(state.range(0));
  Dataset data = make_cloud(n, 3, 12);
  MultiLevelOptions opts;
  opts.memoize = true;
  auto tree = build_multilevel(data, kSpec, opts);
  RngStream rng(13);
  auto table = approx_degrees(tree, 0.0, rng);
  for (auto _ : state) {
    benchmark::DoNotOptimize(
        random_walk(tree, &table, 0, 8, WalkMode::exact_neighbor, rng)
            .endpoint);
  }
  state.SetItemsProcessed(static_cast<std::int64_t>(state.iterations()) * 8);
}
BENCHMARK(bm_walk_step)->Arg(1024);

void bm_sparsify(benchmark::State& state) {
  auto n = static_cast<std::size_t>(state.range(0));
  Dataset data = make_cloud(n, 3, 14);
  MultiLevelOptions opts;
  opts.memoize = true;
  auto tree = build_multilevel(data, kSpec, opts);
  RngStream seed_rng(15);
  auto table = approx_degrees(tree, 0.0, seed_rng);
  SparsifyOptions sopts;
  sopts.t_override = 4 * n;
  for (auto _ : state) {
    RngStream rng(16);
    benchmark::DoNotOptimize(
        spectral_sparsify(table, tree, 0.3, 0.3, rng, sopts).edges.size());
  }
}
BENCHMARK(bm_sparsify)->Arg(256)->Arg(1024);

}  // namespace

BENCHMARK_MAIN();
