#include <benchmark/benchmark.h>

#include "codym/null_models.hpp"
#include "synthetic.hpp"

using namespace codym;

namespace {

void BM_shuffle_replicate(benchmark::State& state) {
  synth::ChainSpec spec;
  spec.conversations = 100;
  spec.min_turns = 220;
  spec.max_turns = 260;
  const Corpus corpus = synth::generate(spec, 2);

  PopulateOptions options;
  options.order = 3;
  options.event_filter = role_filter(Role::Patient);

  Rng rng(7);
  for (auto _ : state) {
    const Corpus shuffled = shuffle_corpus(corpus, rng);
    benchmark::DoNotOptimize(
        mean_model(populate_per_conversation(shuffled, options).models));
  }
  state.SetItemsProcessed(std::int64_t(state.iterations()) *
                          std::int64_t(corpus.total_turns()));
}

BENCHMARK(BM_shuffle_replicate);

void BM_multinomial_sampling(benchmark::State& state) {
  CodymModel base = make_empty_model(2);
  for (auto& w : base.transition_weight) w = 1.0;
  base.event_count = 8;
  finalize_model(base);

  Rng rng(9);
  for (auto _ : state) {
    benchmark::DoNotOptimize(sample_transition_counts(base, state.range(0), rng));
  }
  state.SetItemsProcessed(std::int64_t(state.iterations()) * state.range(0));
}

BENCHMARK(BM_multinomial_sampling)->Arg(1000)->Arg(10000);

}  // namespace
