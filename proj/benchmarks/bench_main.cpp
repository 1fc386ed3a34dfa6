#include <benchmark/benchmark.h>

#include <cstdio>
#include <random>
#include <string>

#include "typomerge/adapter_io.hpp"
#include "typomerge/aggregation.hpp"
#include "typomerge/typology.hpp"
#include "typomerge/weighting.hpp"

namespace {

using namespace typomerge;

LanguageId lang(std::size_t i) {
  char buf[8];
  std::snprintf(buf, sizeof(buf), "s%03zu", i);
  return LanguageId(buf);
}

AdapterCheckpoint random_adapter(std::mt19937_64& rng, std::size_t layers, std::int64_t hidden, std::int64_t bottleneck) {
  std::normal_distribution<float> normal(0.0f, 0.02f);
  AdapterCheckpoint ckpt;
  ckpt.manifest.language = "und";
  auto fill = [&](Shape shape) {
    Tensor t{shape, std::vector<float>(element_count(shape))};
    for (auto& v : t.data) v = normal(rng);
    return t;
  };
  for (std::size_t l = 0; l < layers; ++l) {
    const std::string prefix = "layer" + std::to_string(l) + ".";
    ckpt.tensors.emplace(prefix + "down.weight", fill({bottleneck, hidden}));
    ckpt.tensors.emplace(prefix + "down.bias", fill({bottleneck}));
    ckpt.tensors.emplace(prefix + "up.weight", fill({hidden, bottleneck}));
    ckpt.tensors.emplace(prefix + "up.bias", fill({hidden}));
  }
  return ckpt;
}

DistanceVector random_distances(std::mt19937_64& rng, std::size_t n) {
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  std::map<LanguageId, double> raw;
  for (std::size_t i = 0; i < n; ++i) raw.emplace(lang(i), unit(rng));
  return make_distance_vector(LanguageId("tgt"), DistanceKind::Precomputed, raw);
}

void BM_SimilarityWeights(benchmark::State& state) {
  std::mt19937_64 rng(1);
  const auto dv = random_distances(rng, static_cast<std::size_t>(state.range(0)));
  for (auto _ : state) benchmark::DoNotOptimize(similarity_weights(dv));
  state.SetItemsProcessed(state.iterations() * state.range(0));
}
BENCHMARK(BM_SimilarityWeights)->Arg(4)->Arg(31)->Arg(256);

void BM_TopKWeights(benchmark::State& state) {
  std::mt19937_64 rng(2);
  const auto dv = random_distances(rng, static_cast<std::size_t>(state.range(0)));
  const auto policy = PruningPolicy::top_k(3);
  for (auto _ : state) benchmark::DoNotOptimize(similarity_weights(apply_pruning(dv, policy), policy));
}
BENCHMARK(BM_TopKWeights)->Arg(31)->Arg(256);

// Pool of range(0) adapters, 12 layers of hidden 768 / bottleneck 48.
void BM_Aggregate(benchmark::State& state) {
  std::mt19937_64 rng(3);
  const auto n = static_cast<std::size_t>(state.range(0));
  AdapterPool pool;
  for (std::size_t i = 0; i < n; ++i) pool.emplace(lang(i), random_adapter(rng, 12, 768, 48));
  const auto weights = similarity_weights(random_distances(rng, n)).weights;
  AggregateOptions options;
  options.threads = static_cast<unsigned>(state.range(1));
  std::size_t params = 0;
  for (const auto& [_, t] : pool.begin()->second.tensors) params += t.data.size();
  for (auto _ : state) benchmark::DoNotOptimize(aggregate(pool, weights, options));
  state.SetItemsProcessed(static_cast<std::int64_t>(state.iterations() * params * n));
}
BENCHMARK(BM_Aggregate)->Args({3, 1})->Args({31, 1})->Args({31, 4})->Unit(benchmark::kMillisecond);

void BM_SerializeContainer(benchmark::State& state) {
  std::mt19937_64 rng(4);
  const auto ckpt = random_adapter(rng, 12, 768, 48);
  std::size_t bytes = 0;
  for (auto _ : state) {
    const auto out = serialize_container(ckpt);
    bytes = out.size();
    benchmark::DoNotOptimize(out.data());
  }
  state.SetBytesProcessed(static_cast<std::int64_t>(state.iterations() * bytes));
}
BENCHMARK(BM_SerializeContainer)->Unit(benchmark::kMicrosecond);

void BM_ParseContainer(benchmark::State& state) {
  std::mt19937_64 rng(5);
  const auto bytes = serialize_container(random_adapter(rng, 12, 768, 48));
  for (auto _ : state) benchmark::DoNotOptimize(parse_container(bytes));
  state.SetBytesProcessed(static_cast<std::int64_t>(state.iterations() * bytes.size()));
}
BENCHMARK(BM_ParseContainer)->Unit(benchmark::kMicrosecond);

}  // namespace

BENCHMARK_MAIN();
