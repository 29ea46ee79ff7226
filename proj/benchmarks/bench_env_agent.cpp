#include <benchmark/benchmark.h>

#include "llmens/agent.hpp"
#include "llmens/env.hpp"
#include "llmens/ensemble.hpp"

using namespace llmens;

namespace {

void BM_EnvSteps(benchmark::State& state, const std::string& name) {
  auto env = make_environment(name);
  SeededRng rng(1);
  StateObs obs = env->reset(0);
  std::int64_t steps = 0;
  for (auto _ : state) {
    if (obs.done) obs = env->reset(rng.next());
    obs = env->step(rng.uniform_int(env->spec().action_count)).next_state;
    ++steps;
  }
  state.SetItemsProcessed(steps);
}

void BM_TrainQ(benchmark::State& state, const std::string& name) {
  AgentConfig config;
  config.training_episodes = static_cast<int>(state.range(0));
  std::uint64_t seed = 0;
  for (auto _ : state) {
    benchmark::DoNotOptimize(train_q_learning(name, config, seed++));
  }
}

void BM_GreedyEpisode(benchmark::State& state) {
  AgentConfig config;
  config.training_episodes = 2000;
  const TrainedAgent agent = train_q_learning("four-rooms-forage", config, 0);
  std::uint64_t seed = 0;
  for (auto _ : state) {
    auto env = make_environment("four-rooms-forage");
    benchmark::DoNotOptimize(
        run_single_agent_episode(agent, *env, seed++).episode_return);
  }
}

}  // namespace

BENCHMARK_CAPTURE(BM_EnvSteps, corridor, "two-zone-corridor");
BENCHMARK_CAPTURE(BM_EnvSteps, four_rooms, "four-rooms-forage");
BENCHMARK_CAPTURE(BM_TrainQ, corridor, "two-zone-corridor")->Arg(1000);
BENCHMARK_CAPTURE(BM_TrainQ, four_rooms, "four-rooms-forage")->Arg(200);
BENCHMARK(BM_GreedyEpisode);

BENCHMARK_MAIN();
