#include <benchmark/benchmark.h>

#include <random>

#include "strucgeo/classifier.hpp"

namespace {

std::vector<sg::Tensor3> sample(const sg::Taxonomy& tax, int count) {
    std::mt19937_64 rng(20261014);
    std::normal_distribution<double> g;
    std::vector<sg::Tensor3> hs;
    for (int t = 0; t < count; ++t) {
        sg::Vec c(tax.ambient.cols());
        for (auto& x : c) x = g(rng);
        hs.push_back(sg::Tensor3::from_flat(tax.ambient * c, tax.space_dim));
    }
    return hs;
}

template <auto Fn>
void bm_batch(benchmark::State& state) {
    const auto tax = sg::shared_taxonomy(sg::TaxonomyId::ACMS12, static_cast<int>(state.range(0)));
    const auto hs = sample(*tax, 256);
    for (auto _ : state) benchmark::DoNotOptimize(Fn(hs, *tax, sg::kDefaultTolRel));
    state.SetItemsProcessed(state.iterations() * static_cast<int64_t>(hs.size()));
}

}  // namespace

BENCHMARK(bm_batch<sg::classify_batch_serial>)->Name("classify_batch_serial")->Arg(1)->Arg(2)->Arg(3);
BENCHMARK(bm_batch<sg::classify_batch>)->Name("classify_batch_omp")->Arg(1)->Arg(2)->Arg(3);

BENCHMARK_MAIN();
