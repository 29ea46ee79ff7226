#ifndef LLMENS_ENSEMBLE_HPP
#define LLMENS_ENSEMBLE_HPP

#include <functional>
#include <string>
#include <vector>

#include "llmens/agent.hpp"
#include "llmens/combiners.hpp"
#include "llmens/env.hpp"
#include "llmens/reward_profile.hpp"

namespace llmens {

struct EnsembleConfig {
  int cadence_k = 30;
  double combiner_temperature = 1.0;
  std::uint64_t rng_seed = 0;
  // When the categorizer fails mid-episode, keep the previous situation
  // instead of aborting the episode.
  bool hold_previous_on_error = false;
};

struct RunResult {
  double episode_return = 0.0;
  EpisodeTrace trace;
  std::vector<std::pair<int, int>> situation_timeline;          // (step, situation)
  std::vector<std::pair<int, std::string>> selection_timeline;  // (step, agent)
  int categorizer_call_count = 0;

  std::string to_json() const;
  static RunResult from_json(const std::string& text);
};

// Situation-switched ensemble: every K steps the current state is
// re-categorized and control passes to the agent with the best profiled
// reward for that situation; between categorizations the selected agent
// acts greedily.
RunResult run_llm_ens_episode(const std::vector<const TrainedAgent*>& agents,
                              const RewardDistribution& dist,
                              StateCategorizer& categorizer, Environment& env,
                              const EnsembleConfig& config);

// Baseline ensembles: all agents fuse their preferences at every step
// through the named combiner. No categorizer is involved.
RunResult run_combiner_episode(const std::vector<const TrainedAgent*>& agents,
                               const std::string& combiner_name, Environment& env,
                               std::uint64_t seed, double tau);

// Greedy rollout of one agent with a seeded tie RNG.
RunResult run_single_agent_episode(const TrainedAgent& agent, Environment& env,
                                   std::uint64_t seed);

// Per-episode returns for seeds seed_base .. seed_base+episodes-1.
std::vector<double> evaluate(const std::function<RunResult(std::uint64_t)>& run_fn,
                             int episodes, std::uint64_t seed_base);

}  // namespace llmens

#endif
