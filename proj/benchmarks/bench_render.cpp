#include <benchmark/benchmark.h>

#include "codym/viz.hpp"
#include "synthetic.hpp"

using namespace codym;

namespace {

void BM_render_svg(benchmark::State& state) {
  synth::ChainSpec spec;
  spec.conversations = 10;
  spec.min_turns = 60;
  spec.max_turns = 80;
  const Corpus corpus = synth::generate(spec, 3);
  PopulateOptions options;
  options.order = int(state.range(0));
  const CodymModel model = populate_pooled(corpus, options);

  VizSpec viz;
  for (auto _ : state) {
    benchmark::DoNotOptimize(render_svg(model, nullptr, viz));
  }
}

BENCHMARK(BM_render_svg)->Arg(2)->Arg(3)->Arg(5);

}  // namespace
