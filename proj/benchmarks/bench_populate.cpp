#include <benchmark/benchmark.h>

#include "codym/model.hpp"
#include "synthetic.hpp"

using namespace codym;

namespace {

Corpus bench_corpus() {
  synth::ChainSpec spec;
  spec.conversations = 100;
  spec.min_turns = 220;
  spec.max_turns = 260;
  return synth::generate(spec, 1);
}

void BM_populate_pooled(benchmark::State& state) {
  const Corpus corpus = bench_corpus();
  PopulateOptions options;
  options.order = int(state.range(0));
  for (auto _ : state) {
    benchmark::DoNotOptimize(populate_pooled(corpus, options));
  }
  state.SetItemsProcessed(std::int64_t(state.iterations()) *
                          std::int64_t(corpus.total_turns()));
}

BENCHMARK(BM_populate_pooled)->Arg(1)->Arg(3)->Arg(5);

void BM_populate_per_conversation_stratified(benchmark::State& state) {
  const Corpus corpus = bench_corpus();
  PopulateOptions options;
  options.order = 3;
  options.event_filter = role_filter(Role::Patient);
  for (auto _ : state) {
    benchmark::DoNotOptimize(populate_per_conversation(corpus, options));
  }
  state.SetItemsProcessed(std::int64_t(state.iterations()) *
                          std::int64_t(corpus.total_turns()));
}

BENCHMARK(BM_populate_per_conversation_stratified);

}  // namespace
