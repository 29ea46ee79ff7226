#include <benchmark/benchmark.h>

#include "llmens/combiners.hpp"

using namespace llmens;

namespace {

CombinerInput make_input(int agents, int actions) {
  SeededRng gen(42);
  std::vector<std::vector<double>> rows(agents, std::vector<double>(actions));
  for (auto& row : rows)
    for (double& v : row) v = (gen.uniform01() - 0.5) * 4.0;
  CombinerInput input;
  input.action_count = actions;
  input.q_rows = rows;
  for (const auto& row : rows)
    input.probabilities.push_back(boltzmann_probabilities(row, 1.0));
  return input;
}

void BM_Combiner(benchmark::State& state, const std::string& name) {
  const CombinerInput input =
      make_input(static_cast<int>(state.range(0)), static_cast<int>(state.range(1)));
  const CombinerFn combiner = combiner_by_name(name);
  SeededRng rng(7);
  for (auto _ : state) {
    benchmark::DoNotOptimize(combiner(input, rng).chosen_action);
  }
}

}  // namespace

BENCHMARK_CAPTURE(BM_Combiner, majority, "majority")->Args({4, 6})->Args({16, 18});
BENCHMARK_CAPTURE(BM_Combiner, rank, "rank")->Args({4, 6})->Args({16, 18});
BENCHMARK_CAPTURE(BM_Combiner, aggregate, "aggregate")->Args({4, 6})->Args({16, 18});
BENCHMARK_CAPTURE(BM_Combiner, boltzmann_add, "boltzmann-add")->Args({4, 6})->Args({16, 18});
BENCHMARK_CAPTURE(BM_Combiner, boltzmann_mul, "boltzmann-mul")->Args({4, 6})->Args({16, 18});

BENCHMARK_MAIN();
